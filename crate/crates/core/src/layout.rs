//! Screen geometry: bounding boxes, icon placement and hit-testing.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeKind, NodeId};
use crate::icons::{IconAsset, IconKind};
use crate::seed;

pub const CANVAS: u32 = 1000;
pub const ICON_W: i32 = 96;
pub const GLYPH_H: i32 = 96;
pub const LABEL_H: i32 = 24;
pub const ICON_H: i32 = GLYPH_H + LABEL_H;
/// Minimum gap between any two icon boxes.
pub const MARGIN: i32 = 8;

pub const BACK_SLOT: BBox = BBox {
    x0: 16,
    y0: 16,
    x1: 16 + ICON_W,
    y1: 16 + ICON_H,
};
pub const HOME_SLOT: BBox = BBox {
    x0: 1000 - 16 - ICON_W,
    y0: 16,
    x1: 1000 - 16,
    y1: 16 + ICON_H,
};
/// Strip holding the `page_<id>` caption.
pub const PAGE_LABEL_AREA: BBox = BBox {
    x0: 380,
    y0: 0,
    x1: 620,
    y1: 56,
};

const GRID_X: i32 = 40;
const GRID_Y: i32 = 160;
const GRID_COLS: i32 = 5;
const GRID_ROWS: i32 = 4;
const CELL_W: i32 = 184;
const CELL_H: i32 = 200;
const FREE_ATTEMPTS: usize = 20_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("{icons} icons do not fit on the screen of {node}")]
    LayoutOverflow { node: NodeId, icons: usize },
}

/// Axis-aligned box, closed on `x0`/`y0` and open on `x1`/`y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl BBox {
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        BBox { x0, y0, x1, y1 }
    }

    pub fn at(x0: i32, y0: i32) -> Self {
        BBox {
            x0,
            y0,
            x1: x0 + ICON_W,
            y1: y0 + ICON_H,
        }
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn center(&self) -> (i32, i32) {
        ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0
    }

    pub fn inside_canvas(&self) -> bool {
        self.x0 >= 0
            && self.y0 >= 0
            && self.x1 <= CANVAS as i32
            && self.y1 <= CANVAS as i32
            && self.x0 < self.x1
            && self.y0 < self.y1
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    /// True when the two boxes are at least `gap` apart on some axis.
    pub fn separated(&self, other: &BBox, gap: i32) -> bool {
        self.x1 + gap <= other.x0
            || other.x1 + gap <= self.x0
            || self.y1 + gap <= other.y0
            || other.y1 + gap <= self.y0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OnClick {
    Transition { kind: EdgeKind, target: NodeId },
    NoOp,
}

impl OnClick {
    pub fn target(&self) -> Option<NodeId> {
        match self {
            OnClick::Transition { target, .. } => Some(*target),
            OnClick::NoOp => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IconInstance {
    pub asset: IconAsset,
    pub bbox: BBox,
    pub on_click: OnClick,
}

impl IconInstance {
    pub fn name(&self) -> &str {
        &self.asset.name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub node: NodeId,
    pub width: u32,
    pub height: u32,
    pub icons: Vec<IconInstance>,
}

impl ScreenSpec {
    pub fn empty(node: NodeId) -> Self {
        ScreenSpec {
            node,
            width: CANVAS,
            height: CANVAS,
            icons: Vec::new(),
        }
    }

    /// The icon containing `(x, y)`, if any. Boxes are disjoint so at most
    /// one can match.
    pub fn hit_test(&self, x: i32, y: i32) -> Option<&IconInstance> {
        self.icons.iter().find(|i| i.bbox.contains(x, y))
    }

    pub fn hit_index(&self, x: i32, y: i32) -> Option<usize> {
        self.icons.iter().position(|i| i.bbox.contains(x, y))
    }

    /// Index of the icon whose click leads to `target`.
    pub fn icon_for_target(&self, target: NodeId) -> Option<usize> {
        self.icons
            .iter()
            .position(|i| i.on_click.target() == Some(target))
    }

    pub fn icon_named(&self, name: &str) -> Option<&IconInstance> {
        self.icons.iter().find(|i| i.asset.name == name)
    }

    /// Every box inside the canvas and every pair separated by [`MARGIN`].
    pub fn is_well_formed(&self) -> bool {
        self.icons.iter().all(|i| i.bbox.inside_canvas())
            && self.icons.iter().enumerate().all(|(a, ia)| {
                self.icons[a + 1..]
                    .iter()
                    .all(|ib| ia.bbox.separated(&ib.bbox, MARGIN))
            })
    }
}

/// Placement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayoutPolicy {
    /// Home/Back in their reserved top corners; other icons in distinct cells
    /// of a 5x4 grid with a random offset inside each cell.
    #[default]
    Grid,
    /// Uniform positions anywhere on the canvas, rejected until they clear
    /// every placed box. With `pin_system`, Home/Back keep their slots.
    Free { pin_system: bool },
}

fn is_system(asset: &IconAsset) -> bool {
    matches!(asset.kind, IconKind::Home | IconKind::Back)
}

fn slot_for(asset: &IconAsset) -> BBox {
    if asset.kind == IconKind::Home {
        HOME_SLOT
    } else {
        BACK_SLOT
    }
}

/// Places one icon per `(asset, on_click)` pair, preserving input order.
pub fn layout_screen(
    node: NodeId,
    items: Vec<(IconAsset, OnClick)>,
    seed: u64,
    policy: LayoutPolicy,
) -> Result<ScreenSpec, LayoutError> {
    let mut rng = seed::rng(seed, &[b"layout", &node.0.to_le_bytes()]);
    let overflow = LayoutError::LayoutOverflow {
        node,
        icons: items.len(),
    };
    let mut boxes: Vec<Option<BBox>> = vec![None; items.len()];

    let pin = match policy {
        LayoutPolicy::Grid => true,
        LayoutPolicy::Free { pin_system } => pin_system,
    };
    if pin {
        for (i, (asset, _)) in items.iter().enumerate() {
            if is_system(asset) {
                boxes[i] = Some(slot_for(asset));
            }
        }
    }

    match policy {
        LayoutPolicy::Grid => {
            let pending: Vec<usize> = (0..items.len()).filter(|&i| boxes[i].is_none()).collect();
            let cells = (GRID_COLS * GRID_ROWS) as usize;
            if pending.len() > cells {
                return Err(overflow);
            }
            let mut used = vec![false; cells];
            for i in pending {
                let cell = loop {
                    let c = rng.random_range(0..cells);
                    if !used[c] {
                        used[c] = true;
                        break c as i32;
                    }
                };
                let cx = GRID_X + (cell % GRID_COLS) * CELL_W + MARGIN / 2;
                let cy = GRID_Y + (cell / GRID_COLS) * CELL_H + MARGIN / 2;
                let jx = rng.random_range(0..=CELL_W - ICON_W - MARGIN);
                let jy = rng.random_range(0..=CELL_H - ICON_H - MARGIN);
                boxes[i] = Some(BBox::at(cx + jx, cy + jy));
            }
        }
        LayoutPolicy::Free { .. } => {
            let mut placed: Vec<BBox> = boxes.iter().flatten().copied().collect();
            placed.push(PAGE_LABEL_AREA);
            for slot in boxes.iter_mut().filter(|b| b.is_none()) {
                let b = sample_free(&mut rng, &placed).ok_or(overflow.clone())?;
                placed.push(b);
                *slot = Some(b);
            }
        }
    }

    let icons = items
        .into_iter()
        .zip(boxes)
        .map(|((asset, on_click), bbox)| IconInstance {
            asset,
            bbox: bbox.expect("every icon placed"),
            on_click,
        })
        .collect();
    Ok(ScreenSpec {
        node,
        width: CANVAS,
        height: CANVAS,
        icons,
    })
}

/// Adds icons to an existing screen at free positions, leaving the current
/// icons untouched.
pub fn place_extra(
    screen: &mut ScreenSpec,
    items: Vec<(IconAsset, OnClick)>,
    seed: u64,
) -> Result<(), LayoutError> {
    let mut rng = seed::rng(seed, &[b"extra", &screen.node.0.to_le_bytes()]);
    let mut placed: Vec<BBox> = screen.icons.iter().map(|i| i.bbox).collect();
    placed.push(PAGE_LABEL_AREA);
    let total = screen.icons.len() + items.len();
    for (asset, on_click) in items {
        let bbox = sample_free(&mut rng, &placed).ok_or(LayoutError::LayoutOverflow {
            node: screen.node,
            icons: total,
        })?;
        placed.push(bbox);
        screen.icons.push(IconInstance {
            asset,
            bbox,
            on_click,
        });
    }
    Ok(())
}

fn sample_free(rng: &mut seed::Rng, placed: &[BBox]) -> Option<BBox> {
    let max_x = CANVAS as i32 - MARGIN - ICON_W;
    let max_y = CANVAS as i32 - MARGIN - ICON_H;
    (0..FREE_ATTEMPTS).find_map(|_| {
        let b = BBox::at(
            rng.random_range(MARGIN..=max_x),
            rng.random_range(MARGIN..=max_y),
        );
        placed.iter().all(|p| p.separated(&b, MARGIN)).then_some(b)
    })
}
