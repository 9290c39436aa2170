//! Mental images: the recent statement list rendered into a fixed numeric
//! grid that serves as the Q-learning state.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::triplet::Triplet;
use crate::{Error, Result};

pub const CHAR_ROWS: usize = 10;
pub const CHAR_COLS: usize = 80;
pub const PIXEL_SIDE: usize = 256;
const GLYPH: usize = 8;

/// A rows x cols grid of cells in `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MentalImage {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl MentalImage {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MentalImage {
            rows,
            cols,
            cells: vec![0.0; rows * cols],
        }
    }

    pub fn from_cells(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                actual: cells.len(),
            });
        }
        Ok(MentalImage { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    fn set(&mut self, row: usize, col: usize, v: f64) {
        self.cells[row * self.cols + col] = v;
    }

    /// 64-bit FNV-1a digest of the shape and cell bits; stable across
    /// platforms and releases, used as the tabular state key.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write(&(self.rows as u64).to_le_bytes());
        h.write(&(self.cols as u64).to_le_bytes());
        for c in &self.cells {
            h.write(&c.to_bits().to_le_bytes());
        }
        h.finish()
    }

    /// The character grid behind a char-mode image: `cell * 255` rounded to
    /// a code point, zero as a space. One line per row, trailing blanks kept.
    pub fn char_grid(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| {
                        let code = (self.get(r, c) * 255.0).round() as u32;
                        match char::from_u32(code) {
                            Some(ch) if code >= 32 && code != 127 => ch,
                            _ => ' ',
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// PBM (plain `P1`) raster, a cell counts as lit when `>= 0.5`.
    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.cols, self.rows);
        for r in 0..self.rows {
            let row: Vec<&str> = (0..self.cols)
                .map(|c| if self.get(r, c) >= 0.5 { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

pub(crate) struct Fnv64(u64);

impl Fnv64 {
    pub(crate) fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

/// The simulation program: at most `capacity` statements, most recent last.
#[derive(Clone, Debug, PartialEq)]
pub struct StatementWindow {
    capacity: usize,
    statements: VecDeque<Triplet>,
}

impl StatementWindow {
    pub fn new(capacity: usize) -> Self {
        StatementWindow {
            capacity: capacity.max(1),
            statements: VecDeque::new(),
        }
    }

    pub fn push(&mut self, t: Triplet) {
        self.statements.push_back(t);
        while self.statements.len() > self.capacity {
            self.statements.pop_front();
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triplet> {
        self.statements.iter()
    }

    pub fn clear(&mut self) {
        self.statements.clear();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Arrangement {
    /// Statements flow left to right, top to bottom.
    #[default]
    Justified,
    /// One statement per row, centered.
    Pyramid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ImageryKind {
    /// 10 x 80 character console, 800 inputs.
    #[default]
    Char,
    /// 256 x 256 binary raster, 65536 inputs.
    Pixel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageryConfig {
    pub kind: ImageryKind,
    pub arrangement: Arrangement,
    pub ca_steps: usize,
    pub window: usize,
}

impl Default for ImageryConfig {
    fn default() -> Self {
        ImageryConfig {
            kind: ImageryKind::Char,
            arrangement: Arrangement::Justified,
            ca_steps: 1,
            window: 10,
        }
    }
}

impl ImageryConfig {
    pub fn input_size(&self) -> usize {
        match self.kind {
            ImageryKind::Char => CHAR_ROWS * CHAR_COLS,
            ImageryKind::Pixel => PIXEL_SIDE * PIXEL_SIDE,
        }
    }

    /// Renders the window and applies the configured automaton steps.
    pub fn render(&self, window: &StatementWindow) -> MentalImage {
        let mut img = match self.kind {
            ImageryKind::Char => render_char(window, self.arrangement),
            ImageryKind::Pixel => render_pixel(window),
        };
        for _ in 0..self.ca_steps {
            img = ca_step(&img).expect("rendered images are larger than 3x3");
        }
        img
    }

    pub fn new_window(&self) -> StatementWindow {
        StatementWindow::new(self.window)
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let kind = match self.kind {
            ImageryKind::Char => "char",
            ImageryKind::Pixel => "pixel",
        };
        let arrangement = match self.arrangement {
            Arrangement::Justified => "justified",
            Arrangement::Pyramid => "pyramid",
        };
        vec![
            ("imagery".to_owned(), kind.to_owned()),
            ("arrangement".to_owned(), arrangement.to_owned()),
            ("ca_steps".to_owned(), self.ca_steps.to_string()),
            ("window".to_owned(), self.window.to_string()),
        ]
    }

    /// Applies one `key=value` setting; `Ok(false)` for foreign keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let bad = || Error::Config(format!("bad value {value:?} for {key}"));
        match key {
            "imagery" => {
                self.kind = match value {
                    "char" => ImageryKind::Char,
                    "pixel" => ImageryKind::Pixel,
                    _ => return Err(bad()),
                }
            }
            "arrangement" => {
                self.arrangement = match value {
                    "justified" => Arrangement::Justified,
                    "pyramid" => Arrangement::Pyramid,
                    _ => return Err(bad()),
                }
            }
            "ca_steps" => self.ca_steps = value.parse().map_err(|_| bad())?,
            "window" => {
                self.window = value.parse().map_err(|_| bad())?;
                if self.window == 0 {
                    return Err(bad());
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}

fn char_code(c: char) -> f64 {
    let code = c as u32;
    let code = if (32..=255).contains(&code) { code } else { '?' as u32 };
    code as f64 / 255.0
}

/// The last `limit` characters of the space-separated statement stream.
fn flowing_text(window: &StatementWindow, limit: usize) -> Vec<char> {
    let text = window.iter().map(Triplet::statement).collect::<Vec<_>>().join(" ");
    let chars: Vec<char> = text.chars().collect();
    let skip = chars.len().saturating_sub(limit);
    chars[skip..].to_vec()
}

pub fn render_char(window: &StatementWindow, arrangement: Arrangement) -> MentalImage {
    let mut img = MentalImage::zeros(CHAR_ROWS, CHAR_COLS);
    match arrangement {
        Arrangement::Justified => {
            for (i, c) in flowing_text(window, CHAR_ROWS * CHAR_COLS).into_iter().enumerate() {
                if c != ' ' {
                    img.cells[i] = char_code(c);
                }
            }
        }
        Arrangement::Pyramid => {
            let skip = window.len().saturating_sub(CHAR_ROWS);
            for (row, t) in window.iter().skip(skip).enumerate() {
                let chars: Vec<char> = t.statement().chars().take(CHAR_COLS).collect();
                let pad = (CHAR_COLS - chars.len()) / 2;
                for (j, c) in chars.into_iter().enumerate() {
                    img.set(row, pad + j, char_code(c));
                }
            }
        }
    }
    img
}

pub fn render_pixel(window: &StatementWindow) -> MentalImage {
    let text_cols = PIXEL_SIDE / GLYPH;
    let text_rows = PIXEL_SIDE / GLYPH;
    let mut img = MentalImage::zeros(PIXEL_SIDE, PIXEL_SIDE);
    for (i, c) in flowing_text(window, text_cols * text_rows).into_iter().enumerate() {
        let code = c as usize;
        let glyph = if code < 128 {
            font8x8::legacy::BASIC_LEGACY[code]
        } else {
            font8x8::legacy::BASIC_LEGACY['?' as usize]
        };
        let (top, left) = ((i / text_cols) * GLYPH, (i % text_cols) * GLYPH);
        for (dy, bits) in glyph.iter().enumerate() {
            for dx in 0..GLYPH {
                if bits & (1 << dx) != 0 {
                    img.set(top + dy, left + dx, 1.0);
                }
            }
        }
    }
    img
}

/// One cellular-automaton step: every interior cell becomes the mean of its
/// four von Neumann neighbours, border cells are copied.
pub fn ca_step(img: &MentalImage) -> Result<MentalImage> {
    if img.rows < 3 || img.cols < 3 {
        return Err(Error::Dimension {
            expected: 3,
            actual: img.rows.min(img.cols),
        });
    }
    let mut next = img.clone();
    for i in 1..img.rows - 1 {
        for j in 1..img.cols - 1 {
            let sum = img.get(i - 1, j) + img.get(i, j - 1) + img.get(i + 1, j) + img.get(i, j + 1);
            next.set(i, j, sum / 4.0);
        }
    }
    Ok(next)
}
