//! Procedural icon assets: pseudo-word names and small glyph programs.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

pub const HOME_NAME: &str = "Home";
pub const BACK_NAME: &str = "Back";

/// Shortest and longest generated name. The upper bound keeps a label within
/// the 96px icon width at the renderer's 12px character advance.
pub const MIN_NAME_LEN: usize = 4;
pub const MAX_NAME_LEN: usize = 8;

/// Words that appear in explanation templates and history lines; a name equal
/// to one of these would make intent matching ambiguous.
const RESERVED: &[&str] = &[
    "home", "back", "click", "icon", "page", "target", "complete", "this", "invalid", "action",
    "explain", "step", "noise", "the", "from",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IconError {
    #[error("name pool exhausted: requested {requested}, only {available} names available")]
    PoolExhausted { requested: usize, available: usize },
    #[error("icon name must not be empty")]
    EmptyName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IconKind {
    Functional,
    Home,
    Back,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Disc,
    Ring,
    Bar { vertical: bool },
    Triangle { dir: Direction },
    Cross,
}

/// One draw op in glyph-local coordinates: the glyph box is 96x96 with the
/// origin of `dx`/`dy` at its center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub color: [u8; 3],
    pub dx: i16,
    pub dy: i16,
    pub size: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Glyph(pub Vec<Primitive>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IconAsset {
    pub icon_id: u32,
    pub name: String,
    pub glyph: Glyph,
    pub kind: IconKind,
}

/// Which half of the palette a glyph draws from. The two halves share no
/// colors, so glyphs forged from different vocabularies never coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vocabulary {
    Primary,
    Alternate,
}

const PRIMARY_COLORS: [[u8; 3]; 6] = [
    [214, 48, 49],
    [9, 132, 227],
    [0, 148, 50],
    [253, 150, 68],
    [108, 92, 231],
    [232, 67, 147],
];
const ALTERNATE_COLORS: [[u8; 3]; 6] = [
    [45, 52, 54],
    [0, 206, 201],
    [225, 177, 44],
    [130, 88, 51],
    [116, 185, 255],
    [85, 239, 196],
];
const SYSTEM_COLOR: [u8; 3] = [60, 64, 72];

impl Vocabulary {
    fn colors(self) -> &'static [[u8; 3]] {
        match self {
            Vocabulary::Primary => &PRIMARY_COLORS,
            Vocabulary::Alternate => &ALTERNATE_COLORS,
        }
    }
}

/// How names are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NameStyle {
    /// Pronounceable syllable-built words.
    #[default]
    PseudoWord,
    /// A fixed list of common English nouns.
    Nouns,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePool {
    names: Vec<String>,
    cursor: usize,
}

impl NamePool {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Next unused name, or `None` once the pool is drained.
    pub fn draw(&mut self) -> Option<String> {
        let name = self.names.get(self.cursor).cloned();
        if name.is_some() {
            self.cursor += 1;
        }
        name
    }
}

impl Iterator for NamePool {
    type Item = String;

    fn next(&mut self) -> Option<String> {
        self.draw()
    }
}

/// `count` distinct pseudo-words.
pub fn make_name_pool(seed: u64, count: usize) -> NamePool {
    make_name_pool_excluding(seed, count, &HashSet::new(), NameStyle::PseudoWord)
        .expect("pseudo-word pools are unbounded")
}

/// Draws `count` names that avoid every entry of `exclude` (compared
/// case-insensitively).
pub fn make_name_pool_excluding(
    seed: u64,
    count: usize,
    exclude: &HashSet<String>,
    style: NameStyle,
) -> Result<NamePool, IconError> {
    let mut taken: HashSet<String> = exclude.iter().map(|n| n.to_ascii_lowercase()).collect();
    taken.extend(RESERVED.iter().map(|s| s.to_string()));
    let mut names = Vec::with_capacity(count);
    match style {
        NameStyle::PseudoWord => {
            let mut rng = seed::rng(seed, &[b"names"]);
            while names.len() < count {
                let word = pseudo_word(&mut rng);
                if taken.insert(word.to_ascii_lowercase()) {
                    names.push(word);
                }
            }
        }
        NameStyle::Nouns => {
            let mut pool: Vec<&str> = NOUNS
                .iter()
                .copied()
                .filter(|n| n.len() >= MIN_NAME_LEN && !taken.contains(&n.to_ascii_lowercase()))
                .collect();
            if pool.len() < count {
                return Err(IconError::PoolExhausted {
                    requested: count,
                    available: pool.len(),
                });
            }
            pool.shuffle(&mut seed::rng(seed, &[b"nouns"]));
            names.extend(pool.into_iter().take(count).map(str::to_string));
        }
    }
    Ok(NamePool { names, cursor: 0 })
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Alternates open (CV) and closed (CVC) syllables until the word is long
/// enough, then capitalizes it.
fn pseudo_word(rng: &mut seed::Rng) -> String {
    loop {
        let mut w = String::new();
        let syllables = rng.random_range(2..=3);
        let mut closed = rng.random_bool(0.5);
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
            w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
            if closed {
                w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
            }
            closed = !closed;
        }
        if (MIN_NAME_LEN..=MAX_NAME_LEN).contains(&w.len()) {
            let mut chars = w.chars();
            let first = chars.next().unwrap().to_ascii_uppercase();
            return std::iter::once(first).chain(chars).collect();
        }
    }
}

pub fn home_glyph() -> Glyph {
    Glyph(vec![
        Primitive {
            shape: Shape::Triangle { dir: Direction::Up },
            color: SYSTEM_COLOR,
            dx: 0,
            dy: -12,
            size: 30,
        },
        Primitive {
            shape: Shape::Bar { vertical: true },
            color: SYSTEM_COLOR,
            dx: -10,
            dy: 16,
            size: 14,
        },
        Primitive {
            shape: Shape::Bar { vertical: true },
            color: SYSTEM_COLOR,
            dx: 10,
            dy: 16,
            size: 14,
        },
    ])
}

pub fn back_glyph() -> Glyph {
    Glyph(vec![
        Primitive {
            shape: Shape::Triangle {
                dir: Direction::Left,
            },
            color: SYSTEM_COLOR,
            dx: -14,
            dy: 0,
            size: 20,
        },
        Primitive {
            shape: Shape::Bar { vertical: false },
            color: SYSTEM_COLOR,
            dx: 10,
            dy: 0,
            size: 18,
        },
    ])
}

/// Builds an asset. Home and Back always get their fixed glyphs; other kinds
/// get 2-5 primitives sampled from `(seed, name)`.
pub fn forge_icon(
    seed: u64,
    icon_id: u32,
    name: &str,
    kind: IconKind,
) -> Result<IconAsset, IconError> {
    forge_icon_in(seed, icon_id, name, kind, Vocabulary::Primary)
}

pub fn forge_icon_in(
    seed: u64,
    icon_id: u32,
    name: &str,
    kind: IconKind,
    vocabulary: Vocabulary,
) -> Result<IconAsset, IconError> {
    if name.is_empty() {
        return Err(IconError::EmptyName);
    }
    let glyph = match kind {
        IconKind::Home => home_glyph(),
        IconKind::Back => back_glyph(),
        IconKind::Functional | IconKind::Noise => sample_glyph(seed, name, vocabulary),
    };
    Ok(IconAsset {
        icon_id,
        name: name.to_string(),
        glyph,
        kind,
    })
}

fn sample_glyph(seed: u64, name: &str, vocabulary: Vocabulary) -> Glyph {
    let tag: &[u8] = match vocabulary {
        Vocabulary::Primary => b"glyph",
        Vocabulary::Alternate => b"glyph-alt",
    };
    let mut rng = seed::rng(seed, &[tag, name.as_bytes()]);
    let colors = vocabulary.colors();
    let count = rng.random_range(2..=5);
    let prims = (0..count)
        .map(|_| {
            let shape = match rng.random_range(0..5) {
                0 => Shape::Disc,
                1 => Shape::Ring,
                2 => Shape::Bar {
                    vertical: rng.random_bool(0.5),
                },
                3 => Shape::Triangle {
                    dir: [
                        Direction::Up,
                        Direction::Down,
                        Direction::Left,
                        Direction::Right,
                    ][rng.random_range(0..4)],
                },
                _ => Shape::Cross,
            };
            Primitive {
                shape,
                color: colors[rng.random_range(0..colors.len())],
                dx: rng.random_range(-20..=20),
                dy: rng.random_range(-20..=20),
                size: rng.random_range(12..=28),
            }
        })
        .collect();
    Glyph(prims)
}

/// Common nouns of at most eight letters, used by [`NameStyle::Nouns`].
const NOUNS: &[&str] = &[
    "Acorn", "Anchor", "Apple", "Arrow", "Badge", "Bagel", "Ball", "Banana", "Banner", "Barrel",
    "Basket", "Beacon", "Bean", "Bear", "Beaver", "Bell", "Bench", "Berry", "Bike", "Bird",
    "Blanket", "Boat", "Bolt", "Bone", "Book", "Boot", "Bottle", "Bowl", "Box", "Branch", "Bread",
    "Brick", "Bridge", "Broom", "Brush", "Bucket", "Bugle", "Bunny", "Button", "Cabin", "Cactus",
    "Cake", "Camel", "Camera", "Candle", "Candy", "Canoe", "Canvas", "Carpet", "Carrot", "Castle",
    "Cat", "Cave", "Chair", "Chalk", "Cherry", "Chess", "Chicken", "Circle", "Clock", "Cloud",
    "Clover", "Coat", "Coffee", "Coin", "Comet", "Compass", "Cookie", "Coral", "Corn", "Cotton",
    "Cow", "Crab", "Crane", "Crayon", "Crown", "Cube", "Cup", "Curtain", "Cushion", "Daisy",
    "Deer", "Desk", "Diamond", "Dice", "Dog", "Dolphin", "Donkey", "Door", "Dragon", "Drum",
    "Duck", "Eagle", "Easel", "Egg", "Engine", "Falcon", "Feather", "Fence", "Fern", "Fiddle",
    "Finch", "Fish", "Flag", "Flame", "Flask", "Flute", "Forest", "Fork", "Fossil", "Fox", "Frog",
    "Garden", "Garlic", "Gate", "Gecko", "Gem", "Ghost", "Giraffe", "Glass", "Globe", "Glove",
    "Goat", "Goose", "Grape", "Guitar", "Hammer", "Harbor", "Harp", "Hat", "Hawk", "Helmet",
    "Heron", "Hill", "Honey", "Hook", "Horn", "Horse", "Igloo", "Island", "Ivy", "Jacket", "Jar",
    "Jelly", "Jewel", "Kettle", "Key", "Kite", "Kitten", "Koala", "Ladder", "Lady", "Lake", "Lamp",
    "Lantern", "Leaf", "Lemon", "Lens", "Letter", "Lily", "Lime", "Lion", "Lizard", "Lock",
    "Locket", "Log", "Lotus", "Magnet", "Mango", "Map", "Maple", "Marble", "Mask", "Meadow",
    "Melon", "Mirror", "Mitten", "Monkey", "Moon", "Moose", "Mouse", "Muffin", "Mug", "Needle",
    "Nest", "Net", "Nut", "Oak", "Oar", "Ocean", "Olive", "Onion", "Orange", "Otter", "Owl",
    "Paddle", "Panda", "Paper", "Parrot", "Peach", "Peanut", "Pear", "Pearl", "Pebble", "Pencil",
    "Pepper", "Piano", "Pillow", "Pine", "Pipe", "Planet", "Plate", "Plum", "Pocket", "Pony",
    "Poppy", "Pot", "Potato", "Pumpkin", "Puppet", "Quill", "Rabbit", "Radio", "Raft", "Rain",
    "Raven", "Ribbon", "Ring", "River", "Robin", "Robot", "Rocket", "Rope", "Rose", "Ruby",
    "Saddle", "Sail", "Salmon", "Sand", "Saw", "Scarf", "Seal", "Seed", "Shark", "Sheep", "Shell",
    "Shield", "Ship", "Shoe", "Shovel", "Skate", "Sled", "Snail", "Snake", "Sock", "Sofa",
    "Spider", "Spoon", "Spring", "Squid", "Stamp", "Star", "Stone", "Stool", "Stove", "Straw",
    "Sugar", "Sun", "Swan", "Sword", "Table", "Teapot", "Tent", "Thimble", "Tiger", "Toast",
    "Tomato", "Torch", "Tower", "Tractor", "Train", "Tree", "Trophy", "Trumpet", "Tulip", "Turkey",
    "Turtle", "Umbrella", "Vase", "Violin", "Wagon", "Walnut", "Wand", "Watch", "Wave", "Whale",
    "Wheel", "Whistle", "Window", "Wolf", "Wood", "Yacht", "Yarn", "Zebra", "Zipper",
];
