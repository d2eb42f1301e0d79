use std::io::Write;

use rand::Rng as _;

use super::{ControlField, StationaryPoint};
use crate::bessel::DualNormOperator;
use crate::error::{Error, Result};
use crate::field::{distance, lp_norm, GridFunction, Point};
use crate::pde::objective;
use crate::rng::Rng;

pub const SCAN_CSV_HEADER: &str = "sample_id,dual_norm,l1_norm,l2_norm,objective_gap,ratio_dual,ratio_l1,ratio_l2";

/// Families of feasible perturbations of a bang-bang control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Flip `ubar` on `{|phibar| <= w}` or on one side of it.
    BandFlip,
    /// Flip `ubar` on a ball.
    PatchFlip,
    /// `clamp(ubar + s psi, -1, 1)` with `psi` a sum of Gaussian bumps.
    SmoothClip,
}

impl Sampler {
    pub const ALL: [Sampler; 3] = [Sampler::BandFlip, Sampler::PatchFlip, Sampler::SmoothClip];
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub n_samples: usize,
    /// Samples keep `||u - ubar||_* <= radius`.
    pub radius: f64,
    pub samplers: Vec<Sampler>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    pub sample_id: usize,
    pub dual_norm: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub objective_gap: f64,
    pub ratio_dual: f64,
    pub ratio_l1: f64,
    pub ratio_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub records: Vec<ScanRecord>,
    /// Smallest `2 (F(u) - F(ubar)) / ||u - ubar||^2` per norm.
    pub c_dual: f64,
    pub c_l1: f64,
    pub c_l2: f64,
    /// Sample attaining `c_dual`.
    pub worst_sample: usize,
}

impl ScanReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SCAN_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.sample_id, r.dual_norm, r.l1_norm, r.l2_norm, r.objective_gap, r.ratio_dual, r.ratio_l1, r.ratio_l2
            )?;
        }
        Ok(())
    }
}

/// Draws the raw parameters of one perturbation; `shrink` scales its size.
struct Draw {
    sampler: Sampler,
    one_sided: Option<f64>,
    centres: Vec<(Point, f64, f64)>,
    size: f64,
}

struct Context<'a> {
    sp: &'a StationaryPoint,
    interior: Vec<usize>,
    phi_max: f64,
    lo: Point,
    hi: Point,
    h: f64,
}

impl<'a> Context<'a> {
    fn new(sp: &'a StationaryPoint) -> Self {
        let mask = sp.mask();
        let g = *mask.grid();
        let interior: Vec<usize> = mask.interior_nodes().collect();
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &interior {
            let x = g.node(i);
            for k in 0..g.dim() {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        Self { sp, phi_max: sp.phibar().max_abs(), lo, hi, h: g.spacing()[0], interior }
    }

    fn draw(&self, sampler: Sampler, rng: &mut Rng) -> Draw {
        let d = self.sp.mask().grid().dim();
        let point = |rng: &mut Rng| {
            let mut p = [0.0; 3];
            for k in 0..d {
                p[k] = rng.gen_range(self.lo[k]..=self.hi[k]);
            }
            p
        };
        match sampler {
            Sampler::BandFlip => {
                let side = match rng.gen_range(0..3) {
                    0 => Some(1.0),
                    1 => Some(-1.0),
                    _ => None,
                };
                let size = 0.25 * self.phi_max * 2f64.powf(-rng.gen_range(0.0..4.0));
                Draw { sampler, one_sided: side, centres: Vec::new(), size }
            }
            Sampler::PatchFlip => {
                let c = point(rng);
                let size = rng.gen_range(2.0 * self.h..0.2);
                Draw { sampler, one_sided: None, centres: vec![(c, 0.0, 0.0)], size }
            }
            Sampler::SmoothClip => {
                let centres = (0..3)
                    .map(|_| {
                        let c = point(rng);
                        let width = rng.gen_range(0.05..0.2);
                        let amp = rng.gen_range(0.2..1.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        (c, width, amp)
                    })
                    .collect();
                Draw { sampler, one_sided: None, centres, size: 1.0 }
            }
        }
    }

    fn control(&self, draw: &Draw) -> Result<ControlField> {
        let ubar = self.sp.ubar().field();
        let phi = self.sp.phibar();
        let g = ubar.grid();
        let mut u = ubar.clone();
        for &i in &self.interior {
            let ub = ubar.values()[i];
            let x = g.node(i);
            let new = match draw.sampler {
                Sampler::BandFlip => {
                    let p = phi.values()[i];
                    let inside = p.abs() <= draw.size && draw.one_sided.is_none_or(|s| p * s > 0.0);
                    if inside {
                        -ub
                    } else {
                        ub
                    }
                }
                Sampler::PatchFlip => {
                    if distance(&x, &draw.centres[0].0) <= draw.size {
                        -ub
                    } else {
                        ub
                    }
                }
                Sampler::SmoothClip => {
                    let psi: f64 = draw
                        .centres
                        .iter()
                        .map(|(c, w, a)| a * (-distance(&x, c).powi(2) / (2.0 * w * w)).exp())
                        .sum();
                    (ub + draw.size * psi).clamp(-1.0, 1.0)
                }
            };
            u.values_mut()[i] = new;
        }
        ControlField::new(u)
    }
}

fn shrink(draw: &mut Draw) {
    draw.size *= match draw.sampler {
        Sampler::BandFlip | Sampler::SmoothClip => 0.5,
        Sampler::PatchFlip => 0.7,
    };
}

/// Samples feasible controls within `radius` of `ubar` in the dual norm and
/// records `2 (F(u) - F(ubar)) / ||u - ubar||^2` for the dual, `L^1` and
/// `L^2` norms. Samplers are used in turn; oversized draws are shrunk until
/// they fit and empty ones redrawn.
pub fn quadratic_growth_scan(
    sp: &StationaryPoint,
    dual: &DualNormOperator,
    cfg: &ScanConfig,
    rng: &mut Rng,
) -> Result<ScanReport> {
    dual.spec().require_growth_valid()?;
    if cfg.n_samples == 0 || cfg.samplers.is_empty() {
        return Err(Error::EmptyFamily("scan needs samples and samplers".into()));
    }
    if !(cfg.radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius = {} must be positive", cfg.radius)));
    }
    let mask = sp.mask();
    let ctx = Context::new(sp);
    let f_bar = sp.objective();
    let mut records = Vec::with_capacity(cfg.n_samples);
    for id in 0..cfg.n_samples {
        let sampler = cfg.samplers[id % cfg.samplers.len()];
        let mut found = None;
        'draws: for _ in 0..50 {
            let mut draw = ctx.draw(sampler, rng);
            for _ in 0..40 {
                let u = ctx.control(&draw)?;
                let v = u.field().zip_with(sp.ubar().field(), |a, b| a - b)?;
                let l1 = lp_norm(&v, 1.0)?;
                if l1 == 0.0 {
                    continue 'draws;
                }
                let dn = dual.norm_of_density(&v, mask)?;
                if dn <= cfg.radius {
                    found = Some((u, v, dn, l1));
                    break 'draws;
                }
                shrink(&mut draw);
            }
        }
        let Some((u, v, dual_norm, l1_norm)) = found else {
            return Err(Error::InvalidArgument(format!("radius {} too small to place sample {id}", cfg.radius)));
        };
        let l2_norm = lp_norm(&v, 2.0)?;
        let objective_gap = objective(sp.problem(), u.field())? - f_bar;
        records.push(ScanRecord {
            sample_id: id,
            dual_norm,
            l1_norm,
            l2_norm,
            objective_gap,
            ratio_dual: 2.0 * objective_gap / (dual_norm * dual_norm),
            ratio_l1: 2.0 * objective_gap / (l1_norm * l1_norm),
            ratio_l2: 2.0 * objective_gap / (l2_norm * l2_norm),
        });
    }
    let min_by = |f: fn(&ScanRecord) -> f64| records.iter().map(f).fold(f64::INFINITY, f64::min);
    let c_dual = min_by(|r| r.ratio_dual);
    let worst_sample = records.iter().find(|r| r.ratio_dual == c_dual).map_or(0, |r| r.sample_id);
    Ok(ScanReport { c_dual, c_l1: min_by(|r| r.ratio_l1), c_l2: min_by(|r| r.ratio_l2), worst_sample, records })
}

/// `count` nonzero feasible differences `u - ubar` drawn by the scan
/// samplers in turn, without a radius constraint.
pub fn random_differences(sp: &StationaryPoint, count: usize, rng: &mut Rng) -> Result<Vec<GridFunction>> {
    let ctx = Context::new(sp);
    let mut out = Vec::with_capacity(count);
    let mut id = 0;
    while out.len() < count {
        let draw = ctx.draw(Sampler::ALL[id % 3], rng);
        id += 1;
        let u = ctx.control(&draw)?;
        let v = u.field().zip_with(sp.ubar().field(), |a, b| a - b)?;
        if v.max_abs() > 0.0 {
            out.push(v);
        }
        if id > 100 * count + 100 {
            return Err(Error::InvalidArgument("could not draw nonzero differences".into()));
        }
    }
    Ok(out)
}
