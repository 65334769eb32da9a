//! Periodic orthonormal discrete wavelet transforms.
//!
//! Both transforms decompose all the way down to a single scaling
//! coefficient. Coefficients are stored coarse-to-fine: index 0 holds the
//! scaling coefficient and the detail block of level `j` occupies indices
//! `2^{jd} .. 2^{(j+1)d}` (0-based). In 2D each level holds three row-major
//! `2^j x 2^j` subbands in the order LH, HL, HH, where the first letter names
//! the filter applied along the vertical axis (rows) and the second the
//! filter along the horizontal axis (columns).
//!
//! Alignment convention: one analysis step maps `x` of length `L` to
//! `a[k] = sum_i lo[i] x[(2k + i) mod L]` and `d[k] = sum_i hi[i] x[(2k + i) mod L]`.
//! Synthesis is the transpose.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::grid::{Grid, Signal};

/// Orthonormal quadrature-mirror filter pair. `order == 1` is Haar.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    order: usize,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletBasis {
    pub const MAX_ORDER: usize = 10;

    pub fn haar() -> Self {
        Self::from_lowpass(1, DB1.to_vec())
    }

    /// Daubechies filters with `order` vanishing moments (`2 * order` taps).
    pub fn daubechies(order: usize) -> Result<Self> {
        let lowpass: &[f64] = match order {
            1 => &DB1,
            2 => &DB2,
            3 => &DB3,
            4 => &DB4,
            5 => &DB5,
            6 => &DB6,
            7 => &DB7,
            8 => &DB8,
            9 => &DB9,
            10 => &DB10,
            _ => return Err(Error::UnsupportedWaveletOrder(order)),
        };
        Ok(Self::from_lowpass(order, lowpass.to_vec()))
    }

    fn from_lowpass(order: usize, lowpass: Vec<f64>) -> Self {
        let taps = lowpass.len();
        let highpass = (0..taps)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[taps - 1 - k]
            })
            .collect();
        Self {
            order,
            lowpass,
            highpass,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_haar(&self) -> bool {
        self.order == 1
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn name(&self) -> String {
        if self.is_haar() {
            "Haar".to_string()
        } else {
            format!("DB({})", self.order)
        }
    }
}

/// Wavelet coefficients of a signal, ordered coarse-to-fine.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    grid: Grid,
    values: Vec<f64>,
}

impl CoeffVector {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// 0-based index range of the level-`j` detail block.
pub fn level_range(grid: Grid, level: u32) -> std::ops::Range<usize> {
    let d = grid.dim() as u32;
    (1usize << (level * d))..(1usize << ((level + 1) * d))
}

/// A wavelet basis bound to a grid. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Dwt {
    basis: WaveletBasis,
    grid: Grid,
}

impl Dwt {
    pub fn new(basis: WaveletBasis, grid: Grid) -> Self {
        Self { basis, grid }
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn forward(&self, f: &Signal) -> Result<CoeffVector> {
        f.ensure_grid(self.grid)?;
        let mut out = vec![0.0; self.grid.len()];
        self.forward_into(f.values(), &mut out);
        Ok(CoeffVector {
            grid: self.grid,
            values: out,
        })
    }

    pub fn inverse(&self, c: &CoeffVector) -> Result<Signal> {
        if c.grid != self.grid {
            return Err(Error::GridMismatch(format!(
                "coefficients on {:?}, transform on {:?}",
                c.grid, self.grid
            )));
        }
        let mut out = vec![0.0; self.grid.len()];
        self.inverse_into(&c.values, &mut out);
        Signal::new(self.grid, out)
    }

    /// Forward transform on raw slices; both must have length `grid.len()`.
    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.grid.len());
        assert_eq!(out.len(), self.grid.len());
        match self.grid.dim() {
            1 => self.forward_1d(x, out),
            _ => self.forward_2d(x, out),
        }
    }

    /// Inverse (= transpose) transform on raw slices.
    pub fn inverse_into(&self, c: &[f64], out: &mut [f64]) {
        assert_eq!(c.len(), self.grid.len());
        assert_eq!(out.len(), self.grid.len());
        match self.grid.dim() {
            1 => self.inverse_1d(c, out),
            _ => self.inverse_2d(c, out),
        }
    }

    pub fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.forward_into(x, &mut out);
        out
    }

    pub fn inverse_vec(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; c.len()];
        self.inverse_into(c, &mut out);
        out
    }

    fn forward_1d(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        out.copy_from_slice(x);
        with_scratch(n, self.basis.order(), |tmp, ph| {
            let mut len = n;
            while len >= 2 {
                analysis_step(&self.basis, &out[..len], &mut tmp[..len], ph);
                out[..len].copy_from_slice(&tmp[..len]);
                len /= 2;
            }
        });
    }

    fn inverse_1d(&self, c: &[f64], out: &mut [f64]) {
        let n = c.len();
        out.copy_from_slice(c);
        with_scratch(n, self.basis.order(), |tmp, ph| {
            let mut len = 2;
            while len <= n {
                synthesis_step(&self.basis, &out[..len], &mut tmp[..len], ph);
                out[..len].copy_from_slice(&tmp[..len]);
                len *= 2;
            }
        });
    }

    fn forward_2d(&self, x: &[f64], out: &mut [f64]) {
        let side = self.grid.n_side();
        let mut buf = x.to_vec();
        let mut line = vec![0.0; side];
        let mut tmp = vec![0.0; side];
        let mut ph = Phases::new(side, self.basis.order());
        let mut m = side;
        while m >= 2 {
            for r in 0..m {
                let row = &mut buf[r * side..r * side + m];
                analysis_step(&self.basis, row, &mut tmp[..m], &mut ph);
                row.copy_from_slice(&tmp[..m]);
            }
            for c in 0..m {
                for r in 0..m {
                    line[r] = buf[r * side + c];
                }
                analysis_step(&self.basis, &line[..m], &mut tmp[..m], &mut ph);
                for r in 0..m {
                    buf[r * side + c] = tmp[r];
                }
            }
            m /= 2;
        }
        pack_2d(&buf, side, out);
    }

    fn inverse_2d(&self, c: &[f64], out: &mut [f64]) {
        let side = self.grid.n_side();
        unpack_2d(c, side, out);
        let mut line = vec![0.0; side];
        let mut tmp = vec![0.0; side];
        let mut ph = Phases::new(side, self.basis.order());
        let mut m = 2;
        while m <= side {
            for col in 0..m {
                for r in 0..m {
                    line[r] = out[r * side + col];
                }
                synthesis_step(&self.basis, &line[..m], &mut tmp[..m], &mut ph);
                for r in 0..m {
                    out[r * side + col] = tmp[r];
                }
            }
            for r in 0..m {
                let row = &mut out[r * side..r * side + m];
                synthesis_step(&self.basis, row, &mut tmp[..m], &mut ph);
                row.copy_from_slice(&tmp[..m]);
            }
            m *= 2;
        }
    }
}

/// Polyphase scratch: even and odd samples, each extended periodically by
/// `M` entries.
struct Phases {
    even: Vec<f64>,
    odd: Vec<f64>,
}

impl Phases {
    fn new(n: usize, m: usize) -> Self {
        Self {
            even: vec![0.0; n / 2 + m],
            odd: vec![0.0; n / 2 + m],
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<(Vec<f64>, Phases)> = RefCell::new((Vec::new(), Phases::new(0, 0)));
}

/// Per-thread line buffer and polyphase scratch, grown on demand. The 1D
/// transforms run thousands of times per NUTS trajectory.
fn with_scratch<R>(n: usize, m: usize, f: impl FnOnce(&mut [f64], &mut Phases) -> R) -> R {
    SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (tmp, ph) = &mut *guard;
        if tmp.len() < n {
            tmp.resize(n, 0.0);
        }
        if ph.even.len() < n / 2 + m {
            *ph = Phases::new(n, m);
        }
        f(&mut tmp[..n], ph)
    })
}

/// One periodic analysis step: `out[..L/2]` approximation, `out[L/2..]` detail.
///
/// Works on the even/odd polyphase parts so the inner loops run over
/// contiguous memory: `a[k] = sum_j lo[2j] x[2(k+j)] + lo[2j+1] x[2(k+j)+1]`.
fn analysis_step(basis: &WaveletBasis, x: &[f64], out: &mut [f64], ph: &mut Phases) {
    let len = x.len();
    let half = len / 2;
    let lo = basis.lowpass();
    let hi = basis.highpass();
    let m = lo.len() / 2;
    let ext = half + m;
    let (even, odd) = (&mut ph.even[..ext], &mut ph.odd[..ext]);
    for (k, pair) in x.chunks_exact(2).enumerate() {
        even[k] = pair[0];
        odd[k] = pair[1];
    }
    for k in half..ext {
        even[k] = even[k - half];
        odd[k] = odd[k - half];
    }
    let (approx, detail) = out.split_at_mut(half);
    let (e, o) = (&even[..half], &odd[..half]);
    for (((a, d), ev), ov) in approx.iter_mut().zip(detail.iter_mut()).zip(e).zip(o) {
        *a = lo[0] * ev + lo[1] * ov;
        *d = hi[0] * ev + hi[1] * ov;
    }
    for j in 1..m {
        let (le, lo_) = (lo[2 * j], lo[2 * j + 1]);
        let (he, ho) = (hi[2 * j], hi[2 * j + 1]);
        let e = &even[j..j + half];
        let o = &odd[j..j + half];
        for (((a, d), ev), ov) in approx.iter_mut().zip(detail.iter_mut()).zip(e).zip(o) {
            *a += le * ev + lo_ * ov;
            *d += he * ev + ho * ov;
        }
    }
}

/// Transpose of [`analysis_step`].
fn synthesis_step(basis: &WaveletBasis, c: &[f64], out: &mut [f64], ph: &mut Phases) {
    let len = c.len();
    let half = len / 2;
    let lo = basis.lowpass();
    let hi = basis.highpass();
    let m = lo.len() / 2;
    let ext = half + m;
    let (approx, detail) = c.split_at(half);
    let (even, odd) = (&mut ph.even[..ext], &mut ph.odd[..ext]);
    for (((ev, ov), a), d) in even.iter_mut().zip(odd.iter_mut()).zip(approx).zip(detail) {
        *ev = lo[0] * a + hi[0] * d;
        *ov = lo[1] * a + hi[1] * d;
    }
    even[half..].fill(0.0);
    odd[half..].fill(0.0);
    for j in 1..m {
        let (le, lo_) = (lo[2 * j], lo[2 * j + 1]);
        let (he, ho) = (hi[2 * j], hi[2 * j + 1]);
        let e = &mut even[j..j + half];
        let o = &mut odd[j..j + half];
        for (((ev, ov), a), d) in e.iter_mut().zip(o.iter_mut()).zip(approx).zip(detail) {
            *ev += le * a + he * d;
            *ov += lo_ * a + ho * d;
        }
    }
    for k in half..ext {
        even[k - half * (k / half)] += even[k];
        odd[k - half * (k / half)] += odd[k];
    }
    for (k, pair) in out.chunks_exact_mut(2).enumerate() {
        pair[0] = even[k];
        pair[1] = odd[k];
    }
}

/// Mallat quadrant layout -> coarse-to-fine coefficient ordering.
fn pack_2d(buf: &[f64], side: usize, out: &mut [f64]) {
    out[0] = buf[0];
    let mut pos = 1;
    let mut s = 1;
    while s < side {
        for (r0, c0) in [(0, s), (s, 0), (s, s)] {
            for r in r0..r0 + s {
                out[pos..pos + s].copy_from_slice(&buf[r * side + c0..r * side + c0 + s]);
                pos += s;
            }
        }
        s *= 2;
    }
}

fn unpack_2d(c: &[f64], side: usize, buf: &mut [f64]) {
    buf[0] = c[0];
    let mut pos = 1;
    let mut s = 1;
    while s < side {
        for (r0, c0) in [(0, s), (s, 0), (s, s)] {
            for r in r0..r0 + s {
                buf[r * side + c0..r * side + c0 + s].copy_from_slice(&c[pos..pos + s]);
                pos += s;
            }
        }
        s *= 2;
    }
}

// Daubechies lowpass filters, obtained by spectral factorization (minimum
// phase root selection) and rounded to 21 significant digits.
const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
#[allow(clippy::excessive_precision)]
const DB2: [f64; 4] = [
    0.482962913144534143375,
    0.836516303737807905575,
    0.224143868042013381026,
    -0.129409522551260381174,
];
#[allow(clippy::excessive_precision)]
const DB3: [f64; 6] = [
    0.332670552950082615999,
    0.806891509311092576494,
    0.459877502118491570095,
    -0.135011020010254588696,
    -0.0854412738820266616928,
    0.0352262918857095366027,
];
#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.230377813308896500863,
    0.71484657055291564709,
    0.630880767929858907882,
    -0.0279837694168598542114,
    -0.18703481171909308408,
    0.0308413818355607636272,
    0.0328830116668851997354,
    -0.0105974017850690321049,
];
#[allow(clippy::excessive_precision)]
const DB5: [f64; 10] = [
    0.160102397974192914481,
    0.60382926979718967054,
    0.724308528437772927728,
    0.138428145901320731505,
    -0.242294887066382031863,
    -0.0322448695846383746485,
    0.0775714938400457135231,
    -0.00624149021279827427419,
    -0.0125807519990819994685,
    0.003335725285473771278,
];
#[allow(clippy::excessive_precision)]
const DB6: [f64; 12] = [
    0.111540743350109463621,
    0.494623890398453085677,
    0.751133908021095350679,
    0.315250351709197629086,
    -0.226264693965439820076,
    -0.129766867567261935562,
    0.0975016055873230491023,
    0.0275228655303057286255,
    -0.0315820393174860295651,
    0.000553842201161496139252,
    0.00477725751094551063964,
    -0.00107730108530847956485,
];
#[allow(clippy::excessive_precision)]
const DB7: [f64; 14] = [
    0.07785205408500917902,
    0.396539319481917306539,
    0.729132090846235119917,
    0.469782287405193122472,
    -0.143906003928564975405,
    -0.224036184993874982638,
    0.0713092192668302647509,
    0.0806126091510830719129,
    -0.0380299369350144135796,
    -0.0165745416306668806541,
    0.012550998556099840613,
    0.000429577972921366521132,
    -0.00180164070404749091527,
    0.000353713799974520248446,
];
#[allow(clippy::excessive_precision)]
const DB8: [f64; 16] = [
    0.054415842243104009955,
    0.312871590914299970659,
    0.675630736297289806808,
    0.585354683654206712771,
    -0.0158291052563493056674,
    -0.284015542961546926516,
    0.000472484573913282770361,
    0.128747426620478458857,
    -0.0173693010018075461696,
    -0.0440882539307947515068,
    0.0139810279173982816487,
    0.00874609404740577671638,
    -0.00487035299345157431042,
    -0.000391740373376947046298,
    0.00067544940645056936637,
    -0.000117476784124769533731,
];
#[allow(clippy::excessive_precision)]
const DB9: [f64; 18] = [
    0.0380779473638783465887,
    0.243834674612590353732,
    0.604823123690111111903,
    0.657288078051300538078,
    0.133197385825007576191,
    -0.293273783279174908806,
    -0.0968407832229764605135,
    0.148540749338106380135,
    0.0307256814793333792123,
    -0.0676328290613299736756,
    0.000250947114831451957587,
    0.0223616621236790972054,
    -0.00472320475775139727793,
    -0.0042815036824634298345,
    0.00184764688305622647662,
    0.000230385763523195967205,
    -0.000251963188942710136975,
    0.0000393473203162715994807,
];
#[allow(clippy::excessive_precision)]
const DB10: [f64; 20] = [
    0.0266700579005555535866,
    0.188176800077691489021,
    0.527201188931725586482,
    0.688459039453603565742,
    0.281172343660577460749,
    -0.249846424327315379416,
    -0.195946274377377043504,
    0.127369340335793260083,
    0.0930573646035723511604,
    -0.0713941471663970871453,
    -0.0294575368218758128583,
    0.0332126740593410017398,
    0.00360655356695616965542,
    -0.0107331754833305750443,
    0.00139535174705290116579,
    0.00199240529518505611716,
    -0.000685856694959711626561,
    -0.000116466855129285450951,
    0.0000935886703200695913341,
    -0.0000132642028945212448124,
];
