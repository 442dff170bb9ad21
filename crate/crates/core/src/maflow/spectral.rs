//! Fourier collocation on the unit torus (R/Z)^{2n}.
//!
//! Fields are stored row-major over the real axes `(x1, y1, x2, y2, ...)`, the
//! last axis fastest, with `z_j = x_j + i y_j`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num::complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Small Hermitian matrix, `n ∈ {1, 2}`; entries `[[a, b], [conj b, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Herm {
    pub n: usize,
    pub a: f64,
    pub d: f64,
    pub b: Complex64,
}

impl Herm {
    pub fn scalar(a: f64) -> Self {
        Self {
            n: 1,
            a,
            d: 0.0,
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn two(a: f64, b: Complex64, d: f64) -> Self {
        Self { n: 2, a, d, b }
    }

    pub fn identity(n: usize) -> Self {
        match n {
            1 => Self::scalar(1.0),
            _ => Self::two(1.0, Complex64::new(0.0, 0.0), 1.0),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            a: self.a * s,
            d: self.d * s,
            b: self.b * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            a: self.a + other.a,
            d: self.d + other.d,
            b: self.b + other.b,
        }
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.a,
            _ => self.a * self.d - self.b.norm_sqr(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self.n {
            1 => self.a,
            _ => self.a + self.d,
        }
    }

    /// `(min, max)` eigenvalue.
    pub fn eigen_range(&self) -> (f64, f64) {
        match self.n {
            1 => (self.a, self.a),
            _ => {
                let mean = 0.5 * (self.a + self.d);
                let half = 0.5 * (self.a - self.d);
                let r = (half * half + self.b.norm_sqr()).sqrt();
                (mean - r, mean + r)
            }
        }
    }

    /// `tr(self⁻¹ · other)`.
    pub fn trace_inv_times(&self, other: &Self) -> f64 {
        match self.n {
            1 => other.a / self.a,
            _ => {
                let cross = (self.b * other.b.conj()).re;
                (self.d * other.a + self.a * other.d - 2.0 * cross) / self.det()
            }
        }
    }
}

impl fmt::Display for Herm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.n {
            1 => write!(f, "[{}]", self.a),
            _ => write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.b.conj(), self.d),
        }
    }
}

/// A Hermitian-matrix-valued field; `h22`, `h12` are empty when `n = 1`.
#[derive(Clone, Debug)]
pub struct HermitianField {
    pub n: usize,
    pub h11: Vec<f64>,
    pub h22: Vec<f64>,
    pub h12: Vec<Complex64>,
}

impl HermitianField {
    pub fn len(&self) -> usize {
        self.h11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h11.is_empty()
    }

    pub fn at(&self, i: usize) -> Herm {
        match self.n {
            1 => Herm::scalar(self.h11[i]),
            _ => Herm::two(self.h11[i], self.h12[i], self.h22[i]),
        }
    }

    /// Pointwise `base + self`.
    pub fn shifted(&self, base: &Herm) -> Self {
        Self {
            n: self.n,
            h11: self.h11.iter().map(|v| v + base.a).collect(),
            h22: self.h22.iter().map(|v| v + base.d).collect(),
            h12: self.h12.iter().map(|v| v + base.b).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            h11: self.h11.iter().map(|v| -v).collect(),
            h22: self.h22.iter().map(|v| -v).collect(),
            h12: self.h12.iter().map(|v| -v).collect(),
        }
    }
}

/// FFT plans and derivative symbols for one `(n, N)` torus grid.
pub struct Spectral {
    n: usize,
    res: usize,
    dims: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `-π²(kx_j² + ky_j²)` per complex coordinate: symbol of ∂_j∂̄_j.
    diag_symbol: Vec<Vec<f64>>,
    /// Real and imaginary parts of the ∂_1∂̄_2 symbol (n = 2).
    off_re: Vec<f64>,
    off_im: Vec<f64>,
    /// Largest |k| over the real axes, per mode.
    max_wave: Vec<usize>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.n)
            .field("res", &self.res)
            .finish()
    }
}

fn wavenumber(j: usize, res: usize) -> i64 {
    if j < res / 2 {
        j as i64
    } else {
        j as i64 - res as i64
    }
}

impl Spectral {
    pub fn new(n: usize, res: usize) -> Self {
        assert!(n == 1 || n == 2, "complex dimension must be 1 or 2");
        assert!(res >= 4 && res.is_power_of_two(), "grid size must be a power of two >= 4");
        let dims = 2 * n;
        let len = res.pow(dims as u32);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(res);
        let inv = planner.plan_fft_inverse(res);

        let mut diag_symbol = vec![vec![0.0; len]; n];
        let mut off_re = if n == 2 { vec![0.0; len] } else { Vec::new() };
        let mut off_im = if n == 2 { vec![0.0; len] } else { Vec::new() };
        let mut max_wave = vec![0; len];
        let nyquist = -(res as i64) / 2;
        let mut k = vec![0i64; dims];
        for idx in 0..len {
            let mut rem = idx;
            for axis in (0..dims).rev() {
                k[axis] = wavenumber(rem % res, res);
                rem /= res;
            }
            max_wave[idx] = k.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
            for j in 0..n {
                let (kx, ky) = (k[2 * j] as f64, k[2 * j + 1] as f64);
                diag_symbol[j][idx] = -PI * PI * (kx * kx + ky * ky);
            }
            if n == 2 {
                // First-derivative factors drop the unpaired Nyquist mode.
                let odd = |v: i64| if v == nyquist { 0.0 } else { v as f64 };
                let (x1, y1, x2, y2) = (odd(k[0]), odd(k[1]), odd(k[2]), odd(k[3]));
                off_re[idx] = -PI * PI * (x1 * x2 + y1 * y2);
                off_im[idx] = -PI * PI * (x1 * y2 - y1 * x2);
            }
        }
        Self {
            n,
            res,
            dims,
            len,
            fwd,
            inv,
            diag_symbol,
            off_re,
            off_im,
            max_wave,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.res as f64
    }

    /// Real coordinates of grid point `idx`.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        let mut rem = idx;
        for axis in (0..self.dims).rev() {
            out[axis] = (rem % self.res) as f64 / self.res as f64;
            rem /= self.res;
        }
        out
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len).map(|i| f(&self.coords(i))).collect()
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let res = self.res;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::new(0.0, 0.0); self.len];
        for axis in 0..self.dims {
            let stride = res.pow((self.dims - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * res;
            // Gather every line along `axis` into contiguous storage.
            let mut line = 0;
            for outer in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let dst = &mut lines[line * res..(line + 1) * res];
                    for (j, v) in dst.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    line += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for outer in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let src = &lines[line * res..(line + 1) * res];
                    for (j, v) in src.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                    line += 1;
                }
            }
        }
        if inverse {
            let scale = 1.0 / self.len as f64;
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }

    pub fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut spectrum, true);
        spectrum
    }

    /// `H(φ)_{jk̄} = ∂²φ/∂z_j∂z̄_k`.
    pub fn complex_hessian(&self, phi: &[f64]) -> HermitianField {
        assert_eq!(phi.len(), self.len, "field size does not match grid");
        let hat = self.forward(phi);
        if self.n == 1 {
            let spec = hat
                .iter()
                .zip(&self.diag_symbol[0])
                .map(|(c, s)| c * s)
                .collect();
            let h11 = self.inverse(spec).into_iter().map(|c| c.re).collect();
            return HermitianField {
                n: 1,
                h11,
                h22: Vec::new(),
                h12: Vec::new(),
            };
        }
        let i = Complex64::new(0.0, 1.0);
        // Two real fields per inverse transform: A + iB.
        let diag = hat
            .iter()
            .zip(self.diag_symbol[0].iter().zip(&self.diag_symbol[1]))
            .map(|(c, (s1, s2))| c * s1 + i * c * s2)
            .collect();
        let off = hat
            .iter()
            .zip(self.off_re.iter().zip(&self.off_im))
            .map(|(c, (re, im))| c * re + i * c * im)
            .collect();
        let diag = self.inverse(diag);
        let off = self.inverse(off);
        HermitianField {
            n: 2,
            h11: diag.iter().map(|c| c.re).collect(),
            h22: diag.iter().map(|c| c.im).collect(),
            h12: off,
        }
    }

    /// Fraction of the non-constant spectral energy carried by modes with
    /// `max |k| > N/3`. Zero for a constant field.
    pub fn tail_fraction(&self, field: &[f64]) -> f64 {
        let hat = self.forward(field);
        let cutoff = self.res / 3;
        let (mut total, mut tail) = (0.0, 0.0);
        for (c, &k) in hat.iter().zip(&self.max_wave) {
            if k == 0 {
                continue;
            }
            let e = c.norm_sqr();
            total += e;
            if k > cutoff {
                tail += e;
            }
        }
        if total <= f64::MIN_POSITIVE * self.len as f64 {
            0.0
        } else {
            tail / total
        }
    }
}
