use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Whether observations live on the real line or on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataKind {
    Linear,
    /// Angles in radians, normalized to `[0, 2π)`.
    Circular,
}

/// One or several independent observation sequences sharing a dimension.
///
/// Points are stored row-major in a flat buffer. Consecutive pairs are only
/// ever formed inside a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSeries {
    dim: usize,
    kind: DataKind,
    values: Vec<f64>,
    seq_lens: Vec<usize>,
}

impl ObservedSeries {
    /// Builds a series from a flat row-major buffer and per-sequence lengths.
    pub fn from_flat(
        values: Vec<f64>,
        dim: usize,
        seq_lens: Vec<usize>,
        kind: DataKind,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        if seq_lens.is_empty() {
            return Err(Error::Shape("at least one sequence is required".into()));
        }
        if let Some((s, len)) = seq_lens.iter().enumerate().find(|(_, &l)| l < 2) {
            return Err(Error::Shape(format!(
                "sequence {s} has {len} points; at least 2 are required"
            )));
        }
        let total: usize = seq_lens.iter().sum();
        if values.len() != total * dim {
            return Err(Error::Shape(format!(
                "expected {} values for {total} points of dimension {dim}, got {}",
                total * dim,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value at point {}, coordinate {}",
                i / dim,
                i % dim
            )));
        }
        let mut values = values;
        if kind == DataKind::Circular {
            if dim != 1 {
                return Err(Error::Shape(format!(
                    "circular data must be univariate, got dimension {dim}"
                )));
            }
            for v in &mut values {
                *v = wrap_angle(*v);
            }
        }
        Ok(Self {
            dim,
            kind,
            values,
            seq_lens,
        })
    }

    /// A single univariate sequence on the real line.
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        Self::from_flat(values, 1, vec![len], DataKind::Linear)
    }

    /// A single sequence of angles in radians.
    pub fn circular(angles: Vec<f64>) -> Result<Self> {
        let len = angles.len();
        Self::from_flat(angles, 1, vec![len], DataKind::Circular)
    }

    /// A single sequence of `d`-dimensional points.
    pub fn multivariate(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::Shape(format!(
                "point {i} has dimension {}, expected {dim}",
                points[i].len()
            )));
        }
        let values = points.iter().flatten().copied().collect();
        Self::from_flat(values, dim, vec![points.len()], DataKind::Linear)
    }

    /// Several independent sequences, each given as a list of points.
    pub fn from_sequences(sequences: &[Vec<Vec<f64>>], kind: DataKind) -> Result<Self> {
        let dim = sequences
            .first()
            .and_then(|s| s.first())
            .map_or(0, Vec::len);
        let mut values = Vec::new();
        for (s, seq) in sequences.iter().enumerate() {
            for (t, p) in seq.iter().enumerate() {
                if p.len() != dim {
                    return Err(Error::Shape(format!(
                        "sequence {s}, point {t} has dimension {}, expected {dim}",
                        p.len()
                    )));
                }
                values.extend_from_slice(p);
            }
        }
        let lens = sequences.iter().map(Vec::len).collect();
        Self::from_flat(values, dim, lens, kind)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    /// Total number of points `N`.
    pub fn n_points(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Total number of within-sequence consecutive pairs `n`.
    pub fn n_pairs(&self) -> usize {
        self.seq_lens.iter().map(|l| l - 1).sum()
    }

    pub fn n_sequences(&self) -> usize {
        self.seq_lens.len()
    }

    pub fn sequence_lengths(&self) -> &[usize] {
        &self.seq_lens
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Iterates over sequences as `(start_index, length)`.
    pub fn sequence_ranges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.seq_lens.iter().scan(0usize, |start, &len| {
            let s = *start;
            *start += len;
            Some((s, len))
        })
    }

    /// Values of coordinate `j` for every point.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.points().map(|p| p[j]).collect()
    }

    /// The univariate series made of coordinate `j`, keeping sequence boundaries.
    pub fn marginal(&self, j: usize) -> Result<Self> {
        if j >= self.dim {
            return Err(Error::Shape(format!(
                "coordinate {j} out of range for dimension {}",
                self.dim
            )));
        }
        Self::from_flat(self.coordinate(j), 1, self.seq_lens.clone(), self.kind)
    }

    /// Keeps every `stride`-th point of each sequence, starting from the first.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        let mut values = Vec::new();
        let mut lens = Vec::new();
        for (start, len) in self.sequence_ranges() {
            let kept = (0..len).step_by(stride).count();
            for t in (0..len).step_by(stride) {
                values.extend_from_slice(self.point(start + t));
            }
            lens.push(kept);
        }
        Self::from_flat(values, self.dim, lens, self.kind)
    }

    /// Single-sequence series obtained by gluing all sequences end to end.
    pub fn concatenated(&self) -> Result<Self> {
        Self::from_flat(
            self.values.clone(),
            self.dim,
            vec![self.n_points()],
            self.kind,
        )
    }
}

/// Maps any finite angle to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}
