//! Whole environments: graph, icon assets, per-screen layouts, and their
//! on-disk form (`env.json` plus `screens/page_<id>.png`).

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BranchingSpec, EdgeKind, GraphError, NavGraph, Navigator, NodeId};
use crate::icons::{self, forge_icon, IconAsset, IconError, IconKind, NameStyle};
use crate::layout::{layout_screen, LayoutError, LayoutPolicy, OnClick, ScreenSpec};
use crate::raster::{render_screen, ImageBuffer, RENDERER_VERSION};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;
pub const METADATA_FILE: &str = "env.json";
pub const SCREENS_DIR: &str = "screens";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("schema version mismatch: found {found:?}, expected {expected}")]
    SchemaVersionMismatch { found: Option<u64>, expected: u32 },
    #[error("corrupt bundle metadata: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Icon(#[from] IconError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantTag {
    Base,
    Image,
    Name,
    Position,
    Noise,
}

impl VariantTag {
    pub fn dir_name(self) -> &'static str {
        match self {
            VariantTag::Base => "base",
            VariantTag::Image => "image",
            VariantTag::Name => "name",
            VariantTag::Position => "position",
            VariantTag::Noise => "noise",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub name_style: NameStyle,
    pub layout: LayoutPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvBundle {
    pub schema_version: u32,
    pub renderer_version: u32,
    pub seed: u64,
    pub variant: VariantTag,
    pub variant_seed: Option<u64>,
    pub branching: BranchingSpec,
    pub graph: NavGraph,
    pub assets: Vec<IconAsset>,
    pub screens: Vec<ScreenSpec>,
}

/// Asset id of the Forward icon leading into `child`.
pub fn forward_asset_id(child: NodeId) -> u32 {
    child.0 + 1
}

pub const HOME_ASSET_ID: u32 = 0;
pub const BACK_ASSET_ID: u32 = 1;

pub fn build_environment(spec: &BranchingSpec, seed: u64) -> Result<EnvBundle, BundleError> {
    build_environment_with(spec, seed, BuildOptions::default())
}

/// Tree, transitions, one asset per Forward edge (names drawn without
/// replacement) plus Home and Back, then a layout for every screen.
pub fn build_environment_with(
    spec: &BranchingSpec,
    seed: u64,
    opts: BuildOptions,
) -> Result<EnvBundle, BundleError> {
    let graph = NavGraph::build(spec)?;
    let transitions = graph.transitions();
    let edge_count = graph.edge_count();

    let names =
        icons::make_name_pool_excluding(seed, edge_count, &HashSet::new(), opts.name_style)?;
    let mut assets = vec![
        forge_icon(seed, HOME_ASSET_ID, icons::HOME_NAME, IconKind::Home)?,
        forge_icon(seed, BACK_ASSET_ID, icons::BACK_NAME, IconKind::Back)?,
    ];
    for (child, name) in graph.ids().skip(1).zip(names) {
        assets.push(forge_icon(
            seed,
            forward_asset_id(child),
            &name,
            IconKind::Functional,
        )?);
    }

    let screens = graph
        .ids()
        .map(|node| {
            let items = transitions
                .out(node)
                .iter()
                .map(|t| {
                    let id = match t.kind {
                        EdgeKind::Forward => forward_asset_id(t.target),
                        EdgeKind::Back => BACK_ASSET_ID,
                        EdgeKind::Home => HOME_ASSET_ID,
                    };
                    (
                        assets[id as usize].clone(),
                        OnClick::Transition {
                            kind: t.kind,
                            target: t.target,
                        },
                    )
                })
                .collect();
            layout_screen(node, items, seed, opts.layout)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(EnvBundle {
        schema_version: SCHEMA_VERSION,
        renderer_version: RENDERER_VERSION,
        seed,
        variant: VariantTag::Base,
        variant_seed: None,
        branching: spec.clone(),
        graph,
        assets,
        screens,
    })
}

impl EnvBundle {
    pub fn screen(&self, node: NodeId) -> Option<&ScreenSpec> {
        self.screens.get(node.index())
    }

    pub fn navigator(&self) -> Navigator {
        Navigator::new(&self.graph)
    }

    pub fn render(&self, node: NodeId) -> Option<ImageBuffer> {
        self.screen(node).map(render_screen)
    }

    pub fn render_all(&self) -> Vec<ImageBuffer> {
        self.screens.par_iter().map(render_screen).collect()
    }

    pub fn asset(&self, icon_id: u32) -> Option<&IconAsset> {
        self.assets.iter().find(|a| a.icon_id == icon_id)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("bundle serializes");
        out.push(b'\n');
        out
    }

    /// Structural checks shared by loading and tests.
    pub fn validate(&self) -> Result<(), BundleError> {
        if self.screens.len() != self.graph.len() {
            return Err(BundleError::Corrupt(format!(
                "{} screens for {} nodes",
                self.screens.len(),
                self.graph.len()
            )));
        }
        for (i, s) in self.screens.iter().enumerate() {
            if s.node.index() != i {
                return Err(BundleError::Corrupt(format!(
                    "screen {i} labelled {}",
                    s.node
                )));
            }
            for icon in &s.icons {
                if let Some(t) = icon.on_click.target() {
                    if !self.graph.contains(t) {
                        return Err(BundleError::Corrupt(format!(
                            "{} links to unknown {t}",
                            s.node
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn screen_file_name(node: NodeId) -> String {
    format!("{node}.png")
}

pub fn screen_path(dir: &Path, node: NodeId) -> PathBuf {
    dir.join(SCREENS_DIR).join(screen_file_name(node))
}

/// Writes `env.json` and one PNG per screen. An existing PNG with identical
/// bytes is left in place.
pub fn save_bundle(b: &EnvBundle, dir: &Path) -> Result<(), BundleError> {
    fs::create_dir_all(dir.join(SCREENS_DIR))?;
    b.screens.par_iter().try_for_each(|s| -> io::Result<()> {
        let png = render_screen(s).to_png()?;
        let path = screen_path(dir, s.node);
        if fs::read(&path).map(|old| old == png).unwrap_or(false) {
            return Ok(());
        }
        fs::write(path, png)
    })?;
    let tmp = dir.join(format!("{METADATA_FILE}.tmp"));
    fs::write(&tmp, b.to_json())?;
    fs::rename(tmp, dir.join(METADATA_FILE))?;
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<EnvBundle, BundleError> {
    let bytes = fs::read(dir.join(METADATA_FILE))?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| BundleError::Corrupt(e.to_string()))?;
    let found = value.get("schema_version").and_then(|v| v.as_u64());
    if found != Some(SCHEMA_VERSION as u64) {
        return Err(BundleError::SchemaVersionMismatch {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let bundle: EnvBundle =
        serde_json::from_value(value).map_err(|e| BundleError::Corrupt(e.to_string()))?;
    bundle.validate()?;
    Ok(bundle)
}

/// Cached PNG for `node`, rendering it when the file is missing.
pub fn load_screen_png(
    dir: &Path,
    bundle: &EnvBundle,
    node: NodeId,
) -> Result<Vec<u8>, BundleError> {
    match fs::read(screen_path(dir, node)) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            let img = bundle.render(node).ok_or(GraphError::UnknownNode(node))?;
            Ok(img.to_png()?)
        }
        Err(e) => Err(e.into()),
    }
}

/// Seed of a named random stream within this environment.
pub(crate) fn stream_seed(base: u64, label: &str) -> u64 {
    seed::derive(base, &[label.as_bytes()])
}
