//! Arithmetic over GF(2^w) for `1 <= w <= 16`, and the dense linear algebra
//! used by encoding, rank checks and decoding.
//!
//! Multiplication goes through log/antilog tables built once per field.
//! Every width has a fixed reduction polynomial (see [`default_polynomial`]);
//! w = 8 uses the AES polynomial `0x11B` and w = 16 uses `0x1100B`.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_WIDTH: u32 = 16;
pub const DEFAULT_WIDTH: u32 = 16;

/// One field symbol. Valid values are `< 2^w` for the field in use.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl std::ops::BitXor for FieldElement {
    type Output = FieldElement;

    fn bitxor(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

impl std::ops::BitXorAssign for FieldElement {
    fn bitxor_assign(&mut self, rhs: FieldElement) {
        self.0 ^= rhs.0;
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("field width {0} is outside 1..=16")]
    UnsupportedWidth(u32),
    #[error("polynomial {poly:#x} does not define GF(2^{width})")]
    NotAField { width: u32, poly: u32 },
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix is singular (rank {rank} < {needed})")]
    Singular { rank: usize, needed: usize },
    #[error("overdetermined system is inconsistent")]
    Inconsistent,
    #[error("entry {value:#x} does not fit in GF(2^{width})")]
    OutOfField { value: u16, width: u32 },
}

/// Reduction polynomial used for each width, including the leading term.
pub fn default_polynomial(width: u32) -> Option<u32> {
    Some(match width {
        1 => 0x3,
        2 => 0x7,
        3 => 0xB,
        4 => 0x13,
        5 => 0x25,
        6 => 0x43,
        7 => 0x83,
        8 => 0x11B,
        9 => 0x211,
        10 => 0x409,
        11 => 0x805,
        12 => 0x1053,
        13 => 0x201B,
        14 => 0x4443,
        15 => 0x8003,
        16 => 0x1100B,
        _ => return None,
    })
}

struct Tables {
    width: u32,
    poly: u32,
    generator: u16,
    /// `exp[i] = g^i`, doubled in length so `log a + log b` needs no reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// GF(2^w) with a fixed reduction polynomial. Cheap to clone.
#[derive(Clone)]
pub struct GaloisField {
    tables: Arc<Tables>,
}

impl fmt::Debug for GaloisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.tables.width, self.tables.poly)
    }
}

impl PartialEq for GaloisField {
    fn eq(&self, other: &Self) -> bool {
        self.tables.width == other.tables.width && self.tables.poly == other.tables.poly
    }
}

impl Eq for GaloisField {}

/// Shift-and-add product reduced modulo `poly`.
fn mul_slow(a: u32, b: u32, width: u32, poly: u32) -> u32 {
    let mut acc = 0u32;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & (1 << width) != 0 {
            a ^= poly;
        }
    }
    acc
}

impl GaloisField {
    pub fn new(width: u32) -> Result<Self, GfError> {
        let poly = default_polynomial(width).ok_or(GfError::UnsupportedWidth(width))?;
        Self::with_polynomial(width, poly)
    }

    /// Builds the field for an arbitrary degree-`width` polynomial. Fails
    /// unless the quotient ring is a field, detected by searching for an
    /// element of full multiplicative order.
    pub fn with_polynomial(width: u32, poly: u32) -> Result<Self, GfError> {
        if !(1..=MAX_WIDTH).contains(&width) {
            return Err(GfError::UnsupportedWidth(width));
        }
        if poly >> width != 1 {
            return Err(GfError::NotAField { width, poly });
        }
        let order = (1u32 << width) - 1;
        let mut exp = vec![0u16; 2 * order as usize];
        let mut log = vec![0u16; 1 << width];
        let start = if width == 1 { 1 } else { 2 };
        for candidate in start..=order {
            let mut x = 1u32;
            let mut full = true;
            for i in 0..order {
                if i > 0 && x == 1 {
                    full = false;
                    break;
                }
                exp[i as usize] = x as u16;
                x = mul_slow(x, candidate, width, poly);
            }
            if full && x == 1 {
                for i in 0..order as usize {
                    exp[i + order as usize] = exp[i];
                    log[exp[i] as usize] = i as u16;
                }
                return Ok(GaloisField {
                    tables: Arc::new(Tables {
                        width,
                        poly,
                        generator: candidate as u16,
                        exp,
                        log,
                    }),
                });
            }
        }
        Err(GfError::NotAField { width, poly })
    }

    pub fn width(&self) -> u32 {
        self.tables.width
    }

    pub fn polynomial(&self) -> u32 {
        self.tables.poly
    }

    /// The primitive element the log tables are built on.
    pub fn generator(&self) -> FieldElement {
        FieldElement(self.tables.generator)
    }

    /// Number of field elements, `2^w`.
    pub fn size(&self) -> u64 {
        1u64 << self.tables.width
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        u64::from(a.0) < self.size()
    }

    pub fn element(&self, value: u16) -> Result<FieldElement, GfError> {
        let a = FieldElement(value);
        if self.contains(a) {
            Ok(a)
        } else {
            Err(GfError::OutOfField {
                value,
                width: self.width(),
            })
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let t = &self.tables;
        FieldElement(t.exp[t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.0 == 0 {
            return None;
        }
        let t = &self.tables;
        let order = (1usize << t.width) - 1;
        let l = t.log[a.0 as usize] as usize;
        Some(FieldElement(t.exp[(order - l) % order]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Option<FieldElement> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.0 == 0 {
            return FieldElement::ZERO;
        }
        let t = &self.tables;
        let order = (1u64 << t.width) - 1;
        let l = u64::from(t.log[a.0 as usize]);
        FieldElement(t.exp[((l * (e % order)) % order) as usize])
    }

    /// `dst[i] ^= c * src[i]` for every `i`.
    #[inline]
    fn axpy(&self, dst: &mut [FieldElement], c: FieldElement, src: &[FieldElement]) {
        if c.0 == 0 {
            return;
        }
        let t = &self.tables;
        let lc = t.log[c.0 as usize] as usize;
        for (d, s) in dst.iter_mut().zip(src) {
            if s.0 != 0 {
                d.0 ^= t.exp[lc + t.log[s.0 as usize] as usize];
            }
        }
    }

    fn scale_in_place(&self, row: &mut [FieldElement], c: FieldElement) {
        for x in row.iter_mut() {
            *x = self.mul(*x, c);
        }
    }

    pub fn mat_mul(&self, a: &FieldMatrix, b: &FieldMatrix) -> Result<FieldMatrix, GfError> {
        if a.cols != b.rows {
            return Err(GfError::DimensionMismatch {
                op: "mat_mul",
                left: a.shape(),
                right: b.shape(),
            });
        }
        let mut out = FieldMatrix::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (k, &coef) in a.row(i).iter().enumerate() {
                self.axpy(out_row, coef, b.row(k));
            }
        }
        Ok(out)
    }

    /// Rank by Gaussian elimination.
    pub fn mat_rank(&self, m: &FieldMatrix) -> usize {
        let mut work = m.clone();
        self.eliminate(&mut work, m.cols, m.cols).len()
    }

    /// Forward-eliminates the first `pivot_cols` columns of `work` in place
    /// (entries right of them are carried along) and returns the pivot
    /// column of each of the leading rows. Stops once `max_rank` pivots are
    /// found.
    fn eliminate(&self, work: &mut FieldMatrix, pivot_cols: usize, max_rank: usize) -> Vec<usize> {
        let cols = work.cols;
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..pivot_cols {
            if rank == work.rows || rank == max_rank {
                break;
            }
            let Some(p) = (rank..work.rows).find(|&r| !work[(r, col)].is_zero()) else {
                continue;
            };
            work.swap_rows(rank, p);
            let inv = self.inv(work[(rank, col)]).expect("pivot is nonzero");
            self.scale_in_place(&mut work.data[rank * cols..(rank + 1) * cols], inv);
            let (head, tail) = work.data.split_at_mut((rank + 1) * cols);
            let pivot_row = &head[rank * cols..];
            for row in tail.chunks_mut(cols) {
                let c = row[col];
                self.axpy(row, c, pivot_row);
            }
            pivots.push(col);
            rank += 1;
        }
        pivots
    }

    /// Solves `m * y = v` for square, full-rank `m`. `v` may have several
    /// columns.
    pub fn mat_solve(&self, m: &FieldMatrix, v: &FieldMatrix) -> Result<FieldMatrix, GfError> {
        if m.rows != m.cols {
            return Err(GfError::DimensionMismatch {
                op: "mat_solve",
                left: m.shape(),
                right: v.shape(),
            });
        }
        self.solve_tall(m, v)
    }

    /// Solves `m * y = v` where `m` has at least as many rows as columns and
    /// full column rank. Extra equations must be consistent.
    pub fn solve_tall(&self, m: &FieldMatrix, v: &FieldMatrix) -> Result<FieldMatrix, GfError> {
        if m.rows != v.rows {
            return Err(GfError::DimensionMismatch {
                op: "solve",
                left: m.shape(),
                right: v.shape(),
            });
        }
        let n = m.cols;
        let rhs = v.cols;
        let mut work = m.hconcat(v);
        let pivots = self.eliminate(&mut work, n, usize::MAX);
        if pivots.len() < n {
            return Err(GfError::Singular {
                rank: pivots.len(),
                needed: n,
            });
        }
        // rows below the pivots must have reduced to 0 = 0
        let width = work.cols;
        for r in n..work.rows {
            if work.data[r * width + n..(r + 1) * width]
                .iter()
                .any(|x| !x.is_zero())
            {
                return Err(GfError::Inconsistent);
            }
        }
        // back substitution on the unit upper-triangular block
        for i in (0..n).rev() {
            let (head, tail) = work.data.split_at_mut(i * width);
            let pivot_row = &tail[..width];
            for row in head.chunks_mut(width) {
                let c = row[i];
                self.axpy(row, c, pivot_row);
            }
        }
        let mut out = FieldMatrix::zeros(n, rhs);
        for i in 0..n {
            out.data[i * rhs..(i + 1) * rhs]
                .copy_from_slice(&work.data[i * width + n..i * width + width]);
        }
        Ok(out)
    }

    /// `rows x cols` Vandermonde matrix with row `i` equal to
    /// `[1, p_i, p_i^2, ..]`.
    pub fn vandermonde(&self, points: &[FieldElement], cols: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(points.len(), cols);
        for (i, &p) in points.iter().enumerate() {
            let mut x = FieldElement::ONE;
            for j in 0..cols {
                m[(i, j)] = x;
                x = self.mul(x, p);
            }
        }
        m
    }

    /// Uniformly random matrix over this field.
    pub fn random_matrix<R: rand::Rng + ?Sized>(
        &self,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> FieldMatrix {
        let mask = (self.size() - 1) as u16;
        let data = (0..rows * cols)
            .map(|_| FieldElement(rng.gen::<u16>() & mask))
            .collect();
        FieldMatrix { rows, cols, data }
    }
}

/// Dense row-major matrix of field symbols.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    #[serde(rename = "entries")]
    data: Vec<FieldElement>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<FieldElement>) -> Result<Self, GfError> {
        if data.len() != rows * cols {
            return Err(GfError::DimensionMismatch {
                op: "new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(FieldMatrix { rows, cols, data })
    }

    pub fn from_values(rows: usize, cols: usize, values: &[u16]) -> Result<Self, GfError> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| FieldElement(v)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = FieldElement::ONE;
        }
        m
    }

    pub fn column(values: Vec<FieldElement>) -> Self {
        FieldMatrix {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column_vec(&self, c: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FieldMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FieldMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * cols);
        head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
    }

    pub fn scale_row(&mut self, field: &GaloisField, r: usize, c: FieldElement) {
        let cols = self.cols;
        field.scale_in_place(&mut self.data[r * cols..(r + 1) * cols], c);
    }

    /// `[self | other]`.
    pub fn hconcat(&self, other: &FieldMatrix) -> FieldMatrix {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        FieldMatrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// True when every entry lies in `field`.
    pub fn fits(&self, field: &GaloisField) -> bool {
        self.data.iter().all(|&x| field.contains(x))
    }
}

impl Index<(usize, usize)> for FieldMatrix {
    type Output = FieldElement;

    fn index(&self, (r, c): (usize, usize)) -> &FieldElement {
        assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for FieldMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut FieldElement {
        assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}
