//! Voxel-grid bodies: representation, random generation, mutation,
//! centre-of-mass aligned comparison and shape descriptors.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side length of the body grid.
pub const GRID: usize = 5;

/// Redraw cap for body mutation.
pub const MUTATION_RETRY_CAP: usize = 1_000;

/// Voxel-count bounds enforced on mutated bodies.
pub const MIN_VOXELS: usize = 5;
pub const MAX_VOXELS: usize = GRID * GRID;

/// Voxel-count range targeted by random initialization.
pub const INIT_MIN_VOXELS: usize = 10;
pub const INIT_MAX_VOXELS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphologyError {
    #[error("no valid mutation found after {0} redraws")]
    RetryExhausted(usize),
    #[error("population diversity needs at least two bodies, got {0}")]
    DegeneratePopulation(usize),
    #[error("cannot parse body {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum VoxelType {
    #[default]
    Empty,
    Rigid,
    Soft,
    ActHorizontal,
    ActVertical,
}

impl VoxelType {
    pub const ALL: [VoxelType; 5] = [
        VoxelType::Empty,
        VoxelType::Rigid,
        VoxelType::Soft,
        VoxelType::ActHorizontal,
        VoxelType::ActVertical,
    ];

    pub const FILLED: [VoxelType; 4] = [
        VoxelType::Rigid,
        VoxelType::Soft,
        VoxelType::ActHorizontal,
        VoxelType::ActVertical,
    ];

    pub fn is_empty(self) -> bool {
        self == VoxelType::Empty
    }

    pub fn is_actuated(self) -> bool {
        matches!(self, VoxelType::ActHorizontal | VoxelType::ActVertical)
    }

    pub fn symbol(self) -> char {
        match self {
            VoxelType::Empty => '.',
            VoxelType::Rigid => 'R',
            VoxelType::Soft => 'S',
            VoxelType::ActHorizontal => 'H',
            VoxelType::ActVertical => 'V',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Some(match c {
            '.' => VoxelType::Empty,
            'R' => VoxelType::Rigid,
            'S' => VoxelType::Soft,
            'H' => VoxelType::ActHorizontal,
            'V' => VoxelType::ActVertical,
            _ => return None,
        })
    }
}

/// A 5x5 body genotype. Row 0 is the top of the robot.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BodyGrid {
    cells: [[VoxelType; GRID]; GRID],
}

impl BodyGrid {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_cells(cells: [[VoxelType; GRID]; GRID]) -> Self {
        Self { cells }
    }

    /// Builds a grid from `(row, col, type)` triples on an empty canvas.
    pub fn from_voxels(voxels: &[(usize, usize, VoxelType)]) -> Self {
        let mut grid = Self::empty();
        for &(r, c, v) in voxels {
            grid.set(r, c, v);
        }
        grid
    }

    pub fn filled(v: VoxelType) -> Self {
        Self { cells: [[v; GRID]; GRID] }
    }

    pub fn cells(&self) -> &[[VoxelType; GRID]; GRID] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> VoxelType {
        self.cells[row][col]
    }

    /// Lookup that treats every out-of-grid position as empty.
    pub fn get_signed(&self, row: i32, col: i32) -> VoxelType {
        if (0..GRID as i32).contains(&row) && (0..GRID as i32).contains(&col) {
            self.cells[row as usize][col as usize]
        } else {
            VoxelType::Empty
        }
    }

    pub fn set(&mut self, row: usize, col: usize, v: VoxelType) {
        self.cells[row][col] = v;
    }

    /// Occupied cells in row-major order.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, VoxelType)> + '_ {
        (0..GRID).flat_map(move |r| {
            (0..GRID).filter_map(move |c| {
                let v = self.cells[r][c];
                (!v.is_empty()).then_some((r, c, v))
            })
        })
    }

    pub fn voxel_count(&self) -> usize {
        self.occupied().count()
    }

    pub fn actuated_count(&self) -> usize {
        self.occupied().filter(|(_, _, v)| v.is_actuated()).count()
    }

    /// True when the non-empty cells form exactly one 4-connected component.
    pub fn is_valid_polyomino(&self) -> bool {
        let Some((r0, c0, _)) = self.occupied().next() else {
            return false;
        };
        let mut seen = [[false; GRID]; GRID];
        let mut stack = vec![(r0, c0)];
        seen[r0][c0] = true;
        let mut reached = 0;
        while let Some((r, c)) = stack.pop() {
            reached += 1;
            for (nr, nc) in neighbors4(r, c) {
                if !seen[nr][nc] && !self.cells[nr][nc].is_empty() {
                    seen[nr][nc] = true;
                    stack.push((nr, nc));
                }
            }
        }
        reached == self.voxel_count()
    }

    /// Left-right mirror image of the body.
    pub fn mirrored(&self) -> Self {
        let mut out = Self::empty();
        for r in 0..GRID {
            for c in 0..GRID {
                out.cells[r][GRID - 1 - c] = self.cells[r][c];
            }
        }
        out
    }

    /// Hamming distance without any re-alignment.
    pub fn raw_hamming(&self, other: &BodyGrid) -> usize {
        (0..GRID)
            .flat_map(|r| (0..GRID).map(move |c| (r, c)))
            .filter(|&(r, c)| self.cells[r][c] != other.cells[r][c])
            .count()
    }
}

fn neighbors4(r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> {
    let (r, c) = (r as i32, c as i32);
    [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        .into_iter()
        .filter(|&(r, c)| (0..GRID as i32).contains(&r) && (0..GRID as i32).contains(&c))
        .map(|(r, c)| (r as usize, c as usize))
}

impl fmt::Display for BodyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.cells.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            for v in row {
                write!(f, "{}", v.symbol())?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BodyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BodyGrid({self})")
    }
}

impl FromStr for BodyGrid {
    type Err = MorphologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| MorphologyError::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let rows: Vec<&str> = s.trim().split('-').collect();
        if rows.len() != GRID {
            return Err(fail("expected 5 rows separated by '-'"));
        }
        let mut grid = BodyGrid::empty();
        for (r, row) in rows.iter().enumerate() {
            let symbols: Vec<char> = row.chars().collect();
            if symbols.len() != GRID {
                return Err(fail("each row must have 5 symbols"));
            }
            for (c, ch) in symbols.into_iter().enumerate() {
                let v = VoxelType::from_symbol(ch).ok_or_else(|| fail("symbols must be one of . R S H V"))?;
                grid.set(r, c, v);
            }
        }
        Ok(grid)
    }
}

impl Serialize for BodyGrid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BodyGrid {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Grows a random polyomino of 10 to 20 voxels from a random seed cell.
pub fn random_body<R: Rng + ?Sized>(rng: &mut R) -> BodyGrid {
    let target = rng.random_range(INIT_MIN_VOXELS..=INIT_MAX_VOXELS);
    let mut grid = BodyGrid::empty();
    let (r0, c0) = (rng.random_range(0..GRID), rng.random_range(0..GRID));
    grid.set(r0, c0, random_filled(rng));
    let mut count = 1;
    while count < target {
        let frontier: Vec<(usize, usize)> = (0..GRID)
            .flat_map(|r| (0..GRID).map(move |c| (r, c)))
            .filter(|&(r, c)| {
                grid.get(r, c).is_empty() && neighbors4(r, c).any(|(nr, nc)| !grid.get(nr, nc).is_empty())
            })
            .collect();
        let (r, c) = frontier[rng.random_range(0..frontier.len())];
        grid.set(r, c, random_filled(rng));
        count += 1;
    }
    grid
}

fn random_filled<R: Rng + ?Sized>(rng: &mut R) -> VoxelType {
    VoxelType::FILLED[rng.random_range(0..VoxelType::FILLED.len())]
}

/// Changes one to three random cells to a different symbol, redrawing
/// until the result is a polyomino of 5 to 25 voxels.
pub fn mutate_body<R: Rng + ?Sized>(body: &BodyGrid, rng: &mut R) -> Result<BodyGrid, MorphologyError> {
    for _ in 0..MUTATION_RETRY_CAP {
        let candidate = draw_mutation(body, rng);
        let n = candidate.voxel_count();
        if (MIN_VOXELS..=MAX_VOXELS).contains(&n) && candidate.is_valid_polyomino() {
            return Ok(candidate);
        }
    }
    Err(MorphologyError::RetryExhausted(MUTATION_RETRY_CAP))
}

fn draw_mutation<R: Rng + ?Sized>(body: &BodyGrid, rng: &mut R) -> BodyGrid {
    let n_changes = rng.random_range(1..=3);
    let mut out = *body;
    for pos in index::sample(rng, GRID * GRID, n_changes) {
        let (r, c) = (pos / GRID, pos % GRID);
        let current = out.get(r, c);
        // uniform over the four symbols different from the current one
        let mut pick = rng.random_range(0..VoxelType::ALL.len() - 1);
        if VoxelType::ALL[pick] == current {
            pick = VoxelType::ALL.len() - 1;
        }
        out.set(r, c, VoxelType::ALL[pick]);
    }
    out
}

/// Unweighted mean `(row, col)` of the occupied cells.
pub fn center_of_mass(body: &BodyGrid) -> (f64, f64) {
    let (mut sr, mut sc, mut n) = (0.0, 0.0, 0.0);
    for (r, c, _) in body.occupied() {
        sr += r as f64;
        sc += c as f64;
        n += 1.0;
    }
    if n == 0.0 {
        return (0.0, 0.0);
    }
    (sr / n, sc / n)
}

/// Integer translation `(d_row, d_col)` that moves `b`'s centre of mass
/// onto `a`'s, rounded half away from zero on each axis.
pub fn alignment_shift(a: &BodyGrid, b: &BodyGrid) -> (i32, i32) {
    let (ar, ac) = center_of_mass(a);
    let (br, bc) = center_of_mass(b);
    ((ar - br).round() as i32, (ac - bc).round() as i32)
}

// Shifted cells land in [-4, 8]; one extra cell of margin on each side.
const CANVAS_LO: i32 = -5;
const CANVAS_HI: i32 = GRID as i32 + 5;

/// Hamming distance after re-aligning the two centres of mass.
pub fn hamming_distance_aligned(a: &BodyGrid, b: &BodyGrid) -> usize {
    let (dr, dc) = alignment_shift(a, b);
    let mut mismatches = 0;
    for r in CANVAS_LO..CANVAS_HI {
        for c in CANVAS_LO..CANVAS_HI {
            if a.get_signed(r, c) != b.get_signed(r - dr, c - dc) {
                mismatches += 1;
            }
        }
    }
    mismatches
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyDescriptor {
    pub active_rate: f64,
    pub compactness: f64,
}

/// Active-voxel rate and area / convex-hull area of a body.
pub fn descriptors(body: &BodyGrid) -> BodyDescriptor {
    let n = body.voxel_count();
    if n == 0 {
        return BodyDescriptor { active_rate: 0.0, compactness: 0.0 };
    }
    let mut corners = Vec::with_capacity(4 * n);
    for (r, c, _) in body.occupied() {
        let (r, c) = (r as i64, c as i64);
        corners.extend_from_slice(&[(c, r), (c + 1, r), (c, r + 1), (c + 1, r + 1)]);
    }
    let hull = convex_hull(corners);
    BodyDescriptor {
        active_rate: body.actuated_count() as f64 / n as f64,
        compactness: n as f64 / polygon_area(&hull),
    }
}

/// Monotone-chain convex hull, counter-clockwise, collinear points dropped.
fn convex_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn polygon_area(poly: &[(i64, i64)]) -> f64 {
    let twice: i64 = (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    twice.abs() as f64 / 2.0
}

/// Mean aligned Hamming distance over all unordered pairs.
pub fn population_diversity(pop: &[BodyGrid]) -> Result<f64, MorphologyError> {
    if pop.len() < 2 {
        return Err(MorphologyError::DegeneratePopulation(pop.len()));
    }
    let mut total = 0usize;
    for i in 0..pop.len() {
        for j in i + 1..pop.len() {
            total += hamming_distance_aligned(&pop[i], &pop[j]);
        }
    }
    let pairs = pop.len() * (pop.len() - 1) / 2;
    Ok(total as f64 / pairs as f64)
}
