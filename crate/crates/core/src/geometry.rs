//! Road and RSU geometry, and construction of beam-switching plans.
//!
//! Positions are measured along the road from the point where the vehicle
//! enters the RSU's covered stretch, so `0 <= x <= d_l`. The RSU sits at
//! lateral distance `d_0` from the trajectory, abreast of `x = d_l / 2`.
//! Angles are azimuths measured from the RSU broadside.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Physical and RF constants of one RSU deployment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    /// Carrier frequency (Hz).
    pub carrier_freq: f64,
    /// Path loss exponent.
    pub pathloss_exp: f64,
    /// EIRP (dBm).
    pub eirp_dbm: f64,
    /// Road length covered by the RSU (m).
    pub d_l: f64,
    /// Lateral offset between RSU and the vehicle trajectory (m).
    pub d_0: f64,
    /// RSU mast height (m).
    pub h_rsu: f64,
    /// Vehicle antenna height (m).
    pub h_vehicle: f64,
    /// True vehicle speed (m/s).
    pub v: f64,
    /// Receiver noise figure (dB).
    pub noise_figure_db: f64,
    /// Channel bandwidth (Hz).
    pub bandwidth: f64,
    /// Shadowing margin (dB).
    pub shadow_margin_db: f64,
    /// Lane width (m).
    pub lane_width: f64,
    /// Standard deviation of the zero-mean speed estimation error (m/s).
    pub sigma_v: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            carrier_freq: 60e9,
            pathloss_exp: 2.0,
            eirp_dbm: 20.0,
            d_l: 100.0,
            d_0: 3.0,
            h_rsu: 7.0,
            h_vehicle: 1.5,
            v: 25.0,
            noise_figure_db: 6.0,
            bandwidth: 2.16e9,
            shadow_margin_db: 10.0,
            lane_width: 3.5,
            // 0.04 v, the error level used for the efficiency comparison.
            sigma_v: 1.0,
        }
    }
}

impl ScenarioParams {
    /// Returns a copy with `sigma_v = rel * v`.
    pub fn with_relative_sigma(mut self, rel: f64) -> Self {
        self.sigma_v = rel * self.v;
        self
    }

    pub fn with_sigma(mut self, sigma_v: f64) -> Self {
        self.sigma_v = sigma_v;
        self
    }

    /// Time for the vehicle to cross the covered stretch.
    pub fn traversal_time(&self) -> f64 {
        self.d_l / self.v
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("pathloss_exp", self.pathloss_exp),
            ("d_l", self.d_l),
            ("d_0", self.d_0),
            ("h_rsu", self.h_rsu),
            ("h_vehicle", self.h_vehicle),
            ("v", self.v),
            ("bandwidth", self.bandwidth),
            ("lane_width", self.lane_width),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("eirp", self.eirp_dbm),
            ("noise_figure", self.noise_figure_db),
            ("shadow_margin", self.shadow_margin_db),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {value}")));
            }
        }
        if !(self.sigma_v.is_finite() && self.sigma_v >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "sigma_v must be finite and >= 0, got {}",
                self.sigma_v
            )));
        }
        if self.h_rsu <= self.h_vehicle {
            return Err(Error::InvalidParams(format!(
                "h_rsu ({}) must exceed h_vehicle ({})",
                self.h_rsu, self.h_vehicle
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Every beam has the same nominal azimuth width.
    EqualBeam,
    /// Every beam covers the same nominal road length.
    EqualCoverage,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::EqualBeam, Strategy::EqualCoverage];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::EqualBeam => "equal_beam",
            Strategy::EqualCoverage => "equal_coverage",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "equal_beam" | "equalbeam" => Ok(Strategy::EqualBeam),
            "equal_coverage" | "equalcoverage" => Ok(Strategy::EqualCoverage),
            other => Err(Error::InvalidSpec(format!(
                "unknown strategy {other:?} (expected equal_beam or equal_coverage)"
            ))),
        }
    }
}

/// Upper bound on the overlap ratio: a beam may share at most half of its
/// nominal segment with its neighbours.
pub const MAX_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub strategy: Strategy,
    pub n_beams: usize,
    pub overlap: f64,
}

impl DesignSpec {
    pub fn new(strategy: Strategy, n_beams: usize, overlap: f64) -> Result<Self> {
        let spec = Self {
            strategy,
            n_beams,
            overlap,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_beams == 0 {
            return Err(Error::InvalidSpec("n_beams must be at least 1".into()));
        }
        if !(self.overlap.is_finite() && (0.0..=MAX_OVERLAP).contains(&self.overlap)) {
            return Err(Error::InvalidSpec(format!(
                "overlap ratio {} outside [0, 0.5]: each beam may overlap its adjacent beams by at most 50%",
                self.overlap
            )));
        }
        Ok(())
    }
}

/// One beam of a plan. Positions in metres, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSector {
    /// 1-based beam index.
    pub index: usize,
    /// Start of the coverage interval.
    pub b_begin: f64,
    /// End of the coverage interval.
    pub b_end: f64,
    /// Position at which the RSU switches from this beam to the next one.
    /// Equals `d_l` for the last beam.
    pub switch_out: f64,
    /// Azimuth width of the coverage interval, overlap included.
    pub azimuth_width: f64,
    /// Azimuth width of the nominal (zero-overlap) segment.
    pub nominal_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPlan {
    pub sectors: Vec<BeamSector>,
    pub theta_rsu: f64,
    pub spec: DesignSpec,
}

impl BeamPlan {
    pub fn n_beams(&self) -> usize {
        self.sectors.len()
    }

    /// Sector `i` (1-based).
    pub fn sector(&self, i: usize) -> &BeamSector {
        &self.sectors[i - 1]
    }

    /// Position at which beam `i` (1-based) is switched in; 0 for the first beam.
    pub fn switch_in(&self, i: usize) -> f64 {
        if i <= 1 {
            0.0
        } else {
            self.sectors[i - 2].switch_out
        }
    }

    pub fn nominal_width_sum(&self) -> f64 {
        self.sectors.iter().map(|s| s.nominal_width).sum()
    }

    pub fn azimuth_widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.sectors.iter().map(|s| s.azimuth_width)
    }
}

/// Azimuth of road position `x` seen from the RSU: `atan((x - d_l/2) / d_0)`.
pub fn azimuth_of(x: f64, params: &ScenarioParams) -> Result<f64> {
    // Allow rounding noise at the ends of the stretch.
    let slack = 1e-12 * params.d_l;
    if !(x.is_finite() && x >= -slack && x <= params.d_l + slack) {
        return Err(Error::Domain {
            what: "position",
            value: x,
            expected: "0 <= x <= d_l",
        });
    }
    Ok(azimuth_unchecked(x, params))
}

#[inline]
pub(crate) fn azimuth_unchecked(x: f64, params: &ScenarioParams) -> f64 {
    ((x - 0.5 * params.d_l) / params.d_0).atan()
}

/// Inverse of [`azimuth_of`].
pub fn position_of(phi: f64, params: &ScenarioParams) -> f64 {
    0.5 * params.d_l + params.d_0 * phi.tan()
}

/// Total azimuth span of the covered stretch, `2 atan(d_l / (2 d_0))`.
pub fn theta_rsu(params: &ScenarioParams) -> f64 {
    2.0 * (params.d_l / (2.0 * params.d_0)).atan()
}

/// Nominal segment boundaries `s_0 = 0 < s_1 < ... < s_N = d_l`.
pub fn nominal_boundaries(strategy: Strategy, n_beams: usize, params: &ScenarioParams) -> Vec<f64> {
    let n = n_beams as f64;
    let mut s: Vec<f64> = match strategy {
        Strategy::EqualCoverage => (0..=n_beams)
            .map(|k| k as f64 * params.d_l / n)
            .collect(),
        Strategy::EqualBeam => {
            let span = theta_rsu(params);
            (0..=n_beams)
                .map(|k| position_of(-0.5 * span + k as f64 * span / n, params))
                .collect()
        }
    };
    // Pin the ends exactly; tan() round-off would otherwise leave them off by ~1e-14.
    s[0] = 0.0;
    s[n_beams] = params.d_l;
    s
}

/// Builds the beam plan for `spec`.
///
/// Each nominal segment `[s_{i-1}, s_i]` is widened into its neighbours: beam
/// `i` reaches back into segment `i-1` by `(o/2) L_{i-1}` and forward into
/// segment `i+1` by `(o/2) L_{i+1}`, where `L_k` is the nominal length of
/// segment `k`. A fraction `o` of every segment is therefore shared with its
/// neighbours, and beams never reach past an adjacent segment. The switch
/// from beam `i` to `i+1` happens at the midpoint of their shared interval.
pub fn build_plan(spec: &DesignSpec, params: &ScenarioParams) -> Result<BeamPlan> {
    spec.validate()?;
    params.validate()?;
    let n = spec.n_beams;
    let o = spec.overlap;
    let s = nominal_boundaries(spec.strategy, n, params);
    let len = |k: usize| -> f64 {
        // Segment k is 1-based; segments outside 1..=n have zero length.
        if k == 0 || k > n {
            0.0
        } else {
            s[k] - s[k - 1]
        }
    };

    let begins: Vec<f64> = (1..=n)
        .map(|i| (s[i - 1] - 0.5 * o * len(i - 1)).max(0.0))
        .collect();
    let ends: Vec<f64> = (1..=n)
        .map(|i| (s[i] + 0.5 * o * len(i + 1)).min(params.d_l))
        .collect();

    let sectors = (1..=n)
        .map(|i| {
            let b_begin = begins[i - 1];
            let b_end = ends[i - 1];
            let switch_out = if i == n {
                params.d_l
            } else {
                0.5 * (begins[i] + b_end)
            };
            BeamSector {
                index: i,
                b_begin,
                b_end,
                switch_out,
                azimuth_width: azimuth_unchecked(b_end, params)
                    - azimuth_unchecked(b_begin, params),
                nominal_width: azimuth_unchecked(s[i], params)
                    - azimuth_unchecked(s[i - 1], params),
            }
        })
        .collect();

    Ok(BeamPlan {
        sectors,
        theta_rsu: theta_rsu(params),
        spec: *spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn table1() -> ScenarioParams {
        ScenarioParams::default()
    }

    #[test]
    fn azimuth_examples() {
        let p = table1();
        assert_eq!(azimuth_of(50.0, &p).unwrap(), 0.0);
        // atan(50/3) evaluated independently.
        assert_abs_diff_eq!(azimuth_of(100.0, &p).unwrap(), 1.510_868_171_673_688_6, epsilon = 1e-12);
        assert_abs_diff_eq!(azimuth_of(0.0, &p).unwrap(), -1.510_868_171_673_688_6, epsilon = 1e-12);
        assert!(azimuth_of(-1.0, &p).is_err());
        assert!(azimuth_of(100.5, &p).is_err());
        assert!(azimuth_of(f64::NAN, &p).is_err());
    }

    #[test]
    fn theta_rsu_examples() {
        let p = table1();
        assert_abs_diff_eq!(theta_rsu(&p), 3.021_736_343_347_377, epsilon = 1e-12);
        assert_abs_diff_eq!(
            theta_rsu(&p),
            azimuth_of(p.d_l, &p).unwrap() - azimuth_of(0.0, &p).unwrap(),
            epsilon = 1e-14
        );
        let square = ScenarioParams { d_l: 6.0, ..p };
        assert_abs_diff_eq!(theta_rsu(&square), std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        let short = ScenarioParams { d_l: 1e-4, ..p };
        assert_relative_eq!(theta_rsu(&short), 1e-4 / 3.0, max_relative = 1e-8);
    }

    #[test]
    fn equal_coverage_no_overlap() {
        let p = table1();
        let plan = build_plan(&DesignSpec::new(Strategy::EqualCoverage, 10, 0.0).unwrap(), &p).unwrap();
        let b2 = plan.sector(2);
        assert_abs_diff_eq!(b2.b_begin, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b2.b_end, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b2.switch_out, 20.0, epsilon = 1e-12);
        // atan(-30/3) - atan(-40/3)
        assert_abs_diff_eq!(b2.azimuth_width, 0.024_808_804_780_395_155, epsilon = 1e-12);
        for i in 2..=10 {
            assert_eq!(plan.sector(i).b_begin, plan.switch_in(i));
            assert_eq!(plan.sector(i).b_begin, plan.sector(i - 1).b_end);
        }
    }

    #[test]
    fn equal_coverage_with_overlap() {
        let p = table1();
        let plan = build_plan(&DesignSpec::new(Strategy::EqualCoverage, 10, 0.3).unwrap(), &p).unwrap();
        let b2 = plan.sector(2);
        assert_abs_diff_eq!(b2.b_begin, 8.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b2.b_end, 21.5, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.sector(1).switch_out, 10.0, epsilon = 1e-12);
        assert_eq!(plan.sector(1).b_begin, 0.0);
        assert_eq!(plan.sector(10).b_end, 100.0);
    }

    #[test]
    fn equal_beam_no_overlap() {
        let p = table1();
        let plan = build_plan(&DesignSpec::new(Strategy::EqualBeam, 10, 0.0).unwrap(), &p).unwrap();
        for s in &plan.sectors {
            assert_abs_diff_eq!(s.azimuth_width, 0.302_173_634_334_737_7, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(plan.sector(1).b_end, 42.080_343_837_621_75, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(DesignSpec::new(Strategy::EqualBeam, 0, 0.0).is_err());
        assert!(DesignSpec::new(Strategy::EqualBeam, 3, 0.51).is_err());
        assert!(DesignSpec::new(Strategy::EqualBeam, 3, -0.1).is_err());
        let err = DesignSpec::new(Strategy::EqualBeam, 3, 0.6).unwrap_err().to_string();
        assert!(err.contains("50%"), "{err}");
        assert!("equal_beam".parse::<Strategy>().is_ok());
        assert!("equal-coverage".parse::<Strategy>().is_ok());
        assert!("equal".parse::<Strategy>().is_err());
    }

    #[test]
    fn single_beam_spans_road() {
        let p = table1();
        for strategy in Strategy::ALL {
            let plan = build_plan(&DesignSpec::new(strategy, 1, 0.5).unwrap(), &p).unwrap();
            let s = plan.sector(1);
            assert_eq!((s.b_begin, s.b_end, s.switch_out), (0.0, 100.0, 100.0));
            assert_abs_diff_eq!(s.azimuth_width, plan.theta_rsu, epsilon = 1e-12);
        }
    }

    fn strategy() -> impl proptest::strategy::Strategy<Value = Strategy> {
        prop_oneof![Just(Strategy::EqualBeam), Just(Strategy::EqualCoverage)]
    }

    proptest! {
        #[test]
        fn plans_tile_the_road(st in strategy(), n in 1usize..=80, o in 0.0f64..=0.5) {
            let p = table1();
            let plan = build_plan(&DesignSpec::new(st, n, o).unwrap(), &p).unwrap();
            prop_assert_eq!(plan.sectors[0].b_begin, 0.0);
            prop_assert_eq!(plan.sectors[n - 1].b_end, p.d_l);
            prop_assert_eq!(plan.sectors[n - 1].switch_out, p.d_l);
            prop_assert!((plan.nominal_width_sum() - plan.theta_rsu).abs() < 1e-9);
            let mut prev_switch = 0.0;
            for (k, s) in plan.sectors.iter().enumerate() {
                prop_assert!(s.b_begin < s.switch_out && s.switch_out <= s.b_end);
                prop_assert!(s.switch_out > prev_switch);
                prop_assert!(s.azimuth_width > 0.0);
                prop_assert!(s.b_begin <= plan.switch_in(k + 1));
                if k + 1 < n {
                    let next = &plan.sectors[k + 1];
                    prop_assert!(next.b_begin <= s.b_end);
                    prop_assert!(next.b_begin <= s.switch_out);
                }
                if k + 2 < n {
                    // Only adjacent beams overlap.
                    prop_assert!(plan.sectors[k + 2].b_begin >= s.b_end);
                }
                prev_switch = s.switch_out;
            }
        }

        #[test]
        fn equal_strategy_invariants(n in 1usize..=80) {
            let p = table1();
            let ec = build_plan(&DesignSpec::new(Strategy::EqualCoverage, n, 0.0).unwrap(), &p).unwrap();
            let l0 = ec.sectors[0].b_end - ec.sectors[0].b_begin;
            for s in &ec.sectors {
                prop_assert!((s.b_end - s.b_begin - l0).abs() < 1e-9);
            }
            let eb = build_plan(&DesignSpec::new(Strategy::EqualBeam, n, 0.0).unwrap(), &p).unwrap();
            for s in &eb.sectors {
                prop_assert!((s.nominal_width - eb.theta_rsu / n as f64).abs() < 1e-9);
            }
            for plan in [&ec, &eb] {
                for (k, s) in plan.sectors.iter().enumerate() {
                    prop_assert_eq!(s.b_begin, plan.switch_in(k + 1));
                    prop_assert_eq!(s.switch_out, s.b_end);
                }
            }
        }

        #[test]
        fn more_overlap_never_narrows_beams(st in strategy(), n in 1usize..=60, o1 in 0.0f64..=0.5, o2 in 0.0f64..=0.5) {
            let p = table1();
            let (lo, hi) = if o1 <= o2 { (o1, o2) } else { (o2, o1) };
            let a = build_plan(&DesignSpec::new(st, n, lo).unwrap(), &p).unwrap();
            let b = build_plan(&DesignSpec::new(st, n, hi).unwrap(), &p).unwrap();
            for (x, y) in a.sectors.iter().zip(&b.sectors) {
                prop_assert!(y.azimuth_width >= x.azimuth_width - 1e-15);
            }
        }

        #[test]
        fn azimuth_round_trip(x in 0.0f64..=100.0) {
            let p = table1();
            let phi = azimuth_of(x, &p).unwrap();
            prop_assert!((position_of(phi, &p) - x).abs() < 1e-9);
            let phi2 = azimuth_of((x + 1e-3).min(100.0), &p).unwrap();
            if x + 1e-3 <= 100.0 {
                prop_assert!(phi2 > phi);
            }
        }
    }
}
