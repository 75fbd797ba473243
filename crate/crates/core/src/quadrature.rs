//! Adaptive Gauss-Kronrod (7/15-point) quadrature by recursive bisection.

#![allow(clippy::excessive_precision)]

/// 15-point Kronrod abscissae on [0, 1]; the Gauss nodes are the odd entries.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    /// Absolute tolerance, in the units of the integral being computed.
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-3,
            max_depth: 40,
        }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.rel_tol.is_finite() && self.abs_tol.is_finite()
    }
}

/// Raised when a subinterval still misses its tolerance at `max_depth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonConvergence {
    pub lo: f64,
    pub hi: f64,
}

/// One G7/K15 panel: (Kronrod estimate, |Kronrod - Gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]`. Returns 0 for an empty or reversed interval.
///
/// The tolerance `max(abs_tol, rel_tol * |I|)` is shared among subintervals in
/// proportion to their width.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, NonConvergence> {
    if !(b > a) {
        return Ok(0.0);
    }
    let (whole, err) = gk15(&f, a, b);
    let tol = cfg.abs_tol.max(cfg.rel_tol * whole.abs());
    if err <= tol {
        return Ok(whole);
    }
    let width = b - a;
    refine(&f, a, b, whole, tol / width, 1, cfg)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    estimate: f64,
    tol_density: f64,
    depth: u32,
    cfg: &QuadratureConfig,
) -> Result<f64, NonConvergence> {
    let mid = 0.5 * (a + b);
    let (left, el) = gk15(f, a, mid);
    let (right, er) = gk15(f, mid, b);
    let combined = left + right;
    if el + er <= tol_density * (b - a) || (combined - estimate).abs() <= f64::EPSILON * combined.abs() {
        return Ok(combined);
    }
    if depth >= cfg.max_depth || !(mid > a && mid < b) {
        return Err(NonConvergence { lo: a, hi: b });
    }
    let l = if el <= tol_density * (mid - a) {
        left
    } else {
        refine(f, a, mid, left, tol_density, depth + 1, cfg)?
    };
    let r = if er <= tol_density * (b - mid) {
        right
    } else {
        refine(f, mid, b, right, tol_density, depth + 1, cfg)?
    };
    Ok(l + r)
}

/// Integrates over `[a, b]` split at the given interior breakpoints, where the
/// integrand may have kinks. Breakpoints outside `(a, b)` are ignored.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64, NonConvergence> {
    if !(b > a) {
        return Ok(0.0);
    }
    let mut knots: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for hi in knots.into_iter().chain(std::iter::once(b)) {
        total += integrate(&f, lo, hi, cfg)?;
        lo = hi;
    }
    Ok(total)
}
