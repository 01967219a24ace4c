//! Perturbed copies of a base environment. Each variant changes one
//! perceptual factor (glyphs, names, positions, or distractor icons) and
//! keeps the navigation graph untouched.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{save_bundle, stream_seed, BundleError, EnvBundle, VariantTag};
use crate::icons::{
    self, forge_icon, forge_icon_in, IconAsset, IconError, IconKind, NameStyle, Vocabulary,
};
use crate::layout::{layout_screen, place_extra, IconInstance, LayoutError, LayoutPolicy, OnClick};

pub const DEFAULT_NOISE_COUNT: usize = 2;
pub const VARIANTS_DIR: &str = "variants";

#[derive(Debug, Error)]
pub enum VariantError {
    #[error("variants can only be derived from a base environment, got {0:?}")]
    VariantOnVariant(VariantTag),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Icon(#[from] IconError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Image,
    Name,
    Position,
    Noise,
}

impl VariantKind {
    pub const ALL: [VariantKind; 4] = [
        VariantKind::Image,
        VariantKind::Name,
        VariantKind::Position,
        VariantKind::Noise,
    ];

    pub fn tag(self) -> VariantTag {
        match self {
            VariantKind::Image => VariantTag::Image,
            VariantKind::Name => VariantTag::Name,
            VariantKind::Position => VariantTag::Position,
            VariantKind::Noise => VariantTag::Noise,
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag().dir_name())
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantKind::ALL
            .into_iter()
            .find(|k| k.tag().dir_name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                format!("unknown variant {s:?} (expected image, name, position or noise)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub kind: VariantKind,
    pub seed: u64,
    /// Distractors added per screen by the noise variant.
    pub noise_count: usize,
    /// Keep Home/Back in their reserved slots under the position variant.
    pub pin_system: bool,
}

impl VariantSpec {
    pub fn new(kind: VariantKind, seed: u64) -> Self {
        VariantSpec {
            kind,
            seed,
            noise_count: DEFAULT_NOISE_COUNT,
            pin_system: false,
        }
    }
}

pub fn apply_variant(base: &EnvBundle, spec: &VariantSpec) -> Result<EnvBundle, VariantError> {
    if base.variant != VariantTag::Base {
        return Err(VariantError::VariantOnVariant(base.variant));
    }
    let vseed = stream_seed(spec.seed, spec.kind.tag().dir_name());
    let mut out = base.clone();
    out.variant = spec.kind.tag();
    out.variant_seed = Some(spec.seed);

    match spec.kind {
        VariantKind::Image => {
            let replaced = replace_functional(&mut out.assets, |a| {
                forge_icon_in(vseed, a.icon_id, &a.name, a.kind, Vocabulary::Alternate)
            })?;
            swap_instance_assets(&mut out, &replaced);
        }
        VariantKind::Name => {
            let taken: HashSet<String> = base.assets.iter().map(|a| a.name.clone()).collect();
            let count = base
                .assets
                .iter()
                .filter(|a| a.kind == IconKind::Functional)
                .count();
            let mut pool =
                icons::make_name_pool_excluding(vseed, count, &taken, NameStyle::PseudoWord)?;
            let replaced = replace_functional(&mut out.assets, |a| {
                let name = pool
                    .draw()
                    .expect("pool sized to the functional icon count");
                Ok(IconAsset { name, ..a.clone() })
            })?;
            swap_instance_assets(&mut out, &replaced);
        }
        VariantKind::Position => {
            let policy = LayoutPolicy::Free {
                pin_system: spec.pin_system,
            };
            out.screens = base
                .screens
                .par_iter()
                .map(|s| {
                    let items = s
                        .icons
                        .iter()
                        .map(|i| (i.asset.clone(), i.on_click))
                        .collect();
                    layout_screen(s.node, items, vseed, policy)
                })
                .collect::<Result<_, _>>()?;
        }
        VariantKind::Noise => {
            let taken: HashSet<String> = base.assets.iter().map(|a| a.name.clone()).collect();
            let total = base.screens.len() * spec.noise_count;
            let names =
                icons::make_name_pool_excluding(vseed, total, &taken, NameStyle::PseudoWord)?;
            let first_id = base
                .assets
                .iter()
                .map(|a| a.icon_id)
                .max()
                .map_or(0, |m| m + 1);
            let noise: Vec<IconAsset> = names
                .names()
                .iter()
                .enumerate()
                .map(|(i, name)| forge_icon(vseed, first_id + i as u32, name, IconKind::Noise))
                .collect::<Result<_, _>>()?;
            out.screens
                .par_iter_mut()
                .enumerate()
                .try_for_each(|(i, screen)| {
                    let items = noise[i * spec.noise_count..(i + 1) * spec.noise_count]
                        .iter()
                        .map(|a| (a.clone(), OnClick::NoOp))
                        .collect();
                    place_extra(screen, items, vseed)
                })?;
            out.assets.extend(noise);
        }
    }
    out.validate()?;
    Ok(out)
}

fn replace_functional(
    assets: &mut [IconAsset],
    mut f: impl FnMut(&IconAsset) -> Result<IconAsset, IconError>,
) -> Result<HashMap<u32, IconAsset>, IconError> {
    let mut replaced = HashMap::new();
    for a in assets.iter_mut().filter(|a| a.kind == IconKind::Functional) {
        *a = f(a)?;
        replaced.insert(a.icon_id, a.clone());
    }
    Ok(replaced)
}

fn swap_instance_assets(env: &mut EnvBundle, replaced: &HashMap<u32, IconAsset>) {
    let update = |i: &mut IconInstance| {
        if let Some(a) = replaced.get(&i.asset.icon_id) {
            i.asset = a.clone();
        }
    };
    env.screens
        .iter_mut()
        .flat_map(|s| s.icons.iter_mut())
        .for_each(update);
}

pub fn variant_dir(root: &Path, kind: VariantKind) -> PathBuf {
    root.join(VARIANTS_DIR).join(kind.tag().dir_name())
}

/// Saves a variant bundle under `<root>/variants/<kind>/`.
pub fn save_variant(
    bundle: &EnvBundle,
    root: &Path,
    kind: VariantKind,
) -> Result<PathBuf, VariantError> {
    let dir = variant_dir(root, kind);
    save_bundle(bundle, &dir)?;
    Ok(dir)
}
