use std::collections::BTreeMap;

/// Row-major matrix of stored draws: one row per kept iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleMatrix {
    cols: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(cols: usize, rows: usize) -> Self {
        Self {
            cols,
            data: Vec::with_capacity(cols * rows),
        }
    }

    pub fn from_rows(cols: usize, data: Vec<f64>) -> Self {
        assert!(cols > 0 && data.len() % cols == 0, "ragged sample matrix");
        Self { cols, data }
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row length");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        if self.cols == 0 {
            0
        } else {
            self.data.len() / self.cols
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for row in self.iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        let n = self.rows().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Run metadata carried alongside the draws.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainMeta {
    pub sampler: String,
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub wall_time_secs: f64,
    /// NUTS: divergent transitions after burn-in.
    pub divergences: usize,
    pub cgls_nonconverged: usize,
    pub cgls_iterations: u64,
    pub cgls_solves: u64,
    /// NUTS: final adapted step size.
    pub step_size: Option<f64>,
    /// NUTS: mean acceptance statistic after burn-in.
    pub mean_accept: Option<f64>,
    /// NUTS: mean tree depth after burn-in.
    pub mean_tree_depth: Option<f64>,
    /// NUTS: gradient evaluations over the whole run.
    pub grad_evals: u64,
}

/// Sample history per named variable (`g`, `h`, `f`, `lambda_diag`,
/// `lambda_h`, `lambda_g`, ...), after burn-in and thinning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainStore {
    pub variables: BTreeMap<String, SampleMatrix>,
    pub meta: ChainMeta,
}

impl ChainStore {
    pub fn get(&self, name: &str) -> Option<&SampleMatrix> {
        self.variables.get(name)
    }

    pub fn insert(&mut self, name: &str, m: SampleMatrix) {
        self.variables.insert(name.to_string(), m);
    }

    pub fn rows(&self) -> usize {
        self.variables.values().next().map_or(0, |m| m.rows())
    }
}

/// Iteration `it` (0-based, counting burn-in) is kept iff it is past burn-in
/// and lands on the thinning stride.
pub(crate) fn is_kept(it: usize, burn_in: usize, thin: usize) -> bool {
    it >= burn_in && (it - burn_in) % thin == 0
}

pub(crate) fn kept_count(n_samples: usize, burn_in: usize, thin: usize) -> usize {
    (n_samples - burn_in).div_ceil(thin)
}
