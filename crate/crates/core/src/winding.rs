//! Winding numbers of the shooting determinant and conjugate instants.
//!
//! The conjugate index is minus the winding number of `rho(z) = det R_z`
//! around the rectangle `(0,1) x (-h,h)` traversed counterclockwise.
//! Phases are unwrapped adaptively: any segment whose phase jump reaches
//! pi/2 is bisected until the jump is resolved or a depth limit is hit,
//! and every sample must clear a relative magnitude floor, otherwise the
//! contour passes through (or too close to) a zero.
//!
//! Instants are localized by degree counting: a vertical strip whose
//! boundary carries nonzero winding is split until its width drops below
//! the requested tolerance; the enclosed winding is the local degree.

use crate::error::{Error, Result};
use crate::form::HermitianForm;
use crate::shooting::{rho, ShootingOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Global sign relating the raw counterclockwise winding number to the
/// conjugate index. Pinned so the classical scalar problem
/// `|u'|^2 - (2.5 pi)^2 |u|^2` gets index +2, matching its Morse index.
pub const INDEX_SIGN: i32 = -1;

/// Axis-aligned rectangle in the `z = lambda + i s` plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub s_lo: f64,
    pub s_hi: f64,
}

impl Rect {
    /// The strip `[lambda_lo, lambda_hi] x [-height, height]`.
    pub fn strip(lambda_lo: f64, lambda_hi: f64, height: f64) -> Self {
        Self {
            lambda_lo,
            lambda_hi,
            s_lo: -height,
            s_hi: height,
        }
    }

    pub fn width(&self) -> f64 {
        self.lambda_hi - self.lambda_lo
    }

    /// Counterclockwise boundary samples, corners included exactly once,
    /// plus the closing repeat of the first point.
    fn boundary(&self, per_side: usize) -> Vec<Complex64> {
        let s = per_side.max(2);
        let mut pts = Vec::with_capacity(4 * s + 1);
        let (a, b, lo, hi) = (self.lambda_lo, self.lambda_hi, self.s_lo, self.s_hi);
        for k in 0..s {
            let t = k as f64 / s as f64;
            pts.push(Complex64::new(a + t * (b - a), lo));
        }
        for k in 0..s {
            let t = k as f64 / s as f64;
            pts.push(Complex64::new(b, lo + t * (hi - lo)));
        }
        for k in 0..s {
            let t = k as f64 / s as f64;
            pts.push(Complex64::new(b - t * (b - a), hi));
        }
        for k in 0..s {
            let t = k as f64 / s as f64;
            pts.push(Complex64::new(a, hi - t * (hi - lo)));
        }
        pts.push(pts[0]);
        pts
    }
}

/// Options for contour sampling and phase unwrapping.
#[derive(Debug, Clone)]
pub struct WindingOptions {
    /// Initial samples per rectangle side on the outer contour.
    pub samples_per_side: usize,
    /// Initial samples per side on localization sub-strips.
    pub strip_samples_per_side: usize,
    /// Maximum bisection depth per segment.
    pub refine_depth: usize,
    /// Relative magnitude floor defining "zero on contour".
    pub magnitude_floor_rel: f64,
    /// Admissible distance of the unwrapped sum from an integer multiple
    /// of 2 pi, in turns.
    pub integer_tol: f64,
    /// Half-height of the outer rectangle.
    pub height: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self {
            samples_per_side: 64,
            strip_samples_per_side: 16,
            refine_depth: 16,
            magnitude_floor_rel: 1e-8,
            integer_tol: 1e-6,
            height: 1.0,
        }
    }
}

/// One evaluated contour point.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSample {
    pub z: Complex64,
    pub log_mag: f64,
    pub phase: f64,
}

/// A traversed closed contour with its unwrapped phase data.
#[derive(Debug, Clone)]
pub struct Contour {
    pub rect: Rect,
    pub samples: Vec<PhaseSample>,
    pub phase_sum: f64,
    pub winding: i32,
}

fn wrap(mut d: f64) -> f64 {
    d = d.rem_euclid(2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    }
    d
}

struct Tracer<'a, F> {
    f: &'a F,
    floor: f64,
    depth_limit: usize,
    out: Vec<PhaseSample>,
    sum: f64,
}

impl<'a, F> Tracer<'a, F>
where
    F: Fn(Complex64) -> Result<(f64, f64)>,
{
    fn eval(&self, z: Complex64) -> Result<PhaseSample> {
        let (log_mag, phase) = (self.f)(z)?;
        if log_mag < self.floor {
            return Err(Error::ZeroOnContour { re: z.re, im: z.im });
        }
        Ok(PhaseSample { z, log_mag, phase })
    }

    fn advance(&mut self, a: PhaseSample, b: PhaseSample, depth: usize) -> Result<()> {
        let d = wrap(b.phase - a.phase);
        if d.abs() < PI / 2.0 {
            self.sum += d;
            self.out.push(b);
            return Ok(());
        }
        if depth >= self.depth_limit {
            return Err(Error::RefinementExhausted { re: b.z.re, im: b.z.im });
        }
        let mid = self.eval((a.z + b.z) * Complex64::new(0.5, 0.0))?;
        self.advance(a, mid, depth + 1)?;
        self.advance(mid, b, depth + 1)
    }
}

/// Traces the contour of `f` around `rect` and returns the winding count
/// of `f` about the origin together with the refined sample list.
pub fn winding_of<F>(f: &F, rect: Rect, per_side: usize, opts: &WindingOptions) -> Result<Contour>
where
    F: Fn(Complex64) -> Result<(f64, f64)> + Sync,
{
    let pts = rect.boundary(per_side);
    let raw: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&z| f(z))
        .collect::<Result<Vec<_>>>()?;
    let max_log = raw
        .iter()
        .map(|&(lm, _)| lm)
        .fold(f64::NEG_INFINITY, f64::max);
    let floor = max_log + opts.magnitude_floor_rel.ln();
    let samples: Vec<PhaseSample> = pts
        .iter()
        .zip(&raw)
        .map(|(&z, &(log_mag, phase))| PhaseSample { z, log_mag, phase })
        .collect();
    for s in &samples {
        if s.log_mag < floor {
            return Err(Error::ZeroOnContour {
                re: s.z.re,
                im: s.z.im,
            });
        }
    }
    let mut tracer = Tracer {
        f,
        floor,
        depth_limit: opts.refine_depth,
        out: Vec::with_capacity(samples.len()),
        sum: 0.0,
    };
    tracer.out.push(samples[0]);
    for pair in samples.windows(2) {
        tracer.advance(pair[0], pair[1], 0)?;
    }
    let turns = tracer.sum / (2.0 * PI);
    let winding = turns.round();
    if (turns - winding).abs() > opts.integer_tol {
        return Err(Error::NonIntegerWinding { sum: tracer.sum });
    }
    Ok(Contour {
        rect,
        samples: tracer.out,
        phase_sum: tracer.sum,
        winding: winding as i32,
    })
}

/// Winding number of an arbitrary phase field around a rectangle; the
/// entry point used with an injected function in tests and with the
/// shooting determinant in production.
pub fn winding_number<F>(f: &F, rect: Rect, opts: &WindingOptions) -> Result<i32>
where
    F: Fn(Complex64) -> Result<(f64, f64)> + Sync,
{
    Ok(winding_of(f, rect, opts.samples_per_side, opts)?.winding)
}

fn rho_field<'a>(
    form: &'a HermitianForm,
    shoot: &'a ShootingOptions,
) -> impl Fn(Complex64) -> Result<(f64, f64)> + Sync + 'a {
    move |z| rho(form, z, shoot)
}

/// Maps a zero-on-contour failure near `z = 1` to the degenerate-endpoint
/// condition, which callers treat as a distinct outcome.
fn classify_contour_error(e: Error, rect: &Rect) -> Error {
    if let Error::ZeroOnContour { re, im } = e {
        let near_axis = im.abs() <= 1e-3_f64.max(4.0 * (rect.s_hi - rect.s_lo) / 64.0);
        if near_axis && (re - 1.0).abs() <= 1e-9_f64.max(1e-3 * rect.width()) {
            return Error::DegenerateEndpoint(format!(
                "rho vanishes at lambda = {re}; lambda = 1 appears to be a conjugate instant"
            ));
        }
        return Error::ZeroOnContour { re, im };
    }
    e
}

/// Full contour trace of the shooting determinant around the outer
/// rectangle; feeds the contour CSV output.
pub fn contour_trace(
    form: &HermitianForm,
    shoot: &ShootingOptions,
    opts: &WindingOptions,
) -> Result<Contour> {
    let f = rho_field(form, shoot);
    let rect = Rect::strip(0.0, 1.0, opts.height);
    winding_of(&f, rect, opts.samples_per_side, opts).map_err(|e| classify_contour_error(e, &rect))
}

/// The conjugate index: `INDEX_SIGN` times the winding number of the
/// shooting determinant around the outer rectangle.
pub fn conjugate_index(
    form: &HermitianForm,
    shoot: &ShootingOptions,
    opts: &WindingOptions,
) -> Result<i32> {
    Ok(INDEX_SIGN * contour_trace(form, shoot, opts)?.winding)
}

/// A localized conjugate instant with its enclosed winding (the local
/// Brouwer degree of the shooting determinant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocatedInstant {
    pub lambda: f64,
    pub degree: i32,
}

/// Localizes the real-axis zeros of the shooting determinant by strip
/// bisection to the requested width tolerance.
pub fn localize_instants(
    form: &HermitianForm,
    tol: f64,
    shoot: &ShootingOptions,
    opts: &WindingOptions,
) -> Result<Vec<LocatedInstant>> {
    assert!(tol > 0.0, "tolerance must be positive");
    let f = rho_field(form, shoot);
    let rect = Rect::strip(0.0, 1.0, opts.height);
    let top = winding_of(&f, rect, opts.samples_per_side, opts)
        .map_err(|e| classify_contour_error(e, &rect))?;
    let mut out = Vec::new();
    split_strip(&f, rect, top.winding, tol, opts, &mut out)?;
    out.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(out)
}

fn child_height(parent: f64, width: f64) -> f64 {
    parent.min((4.0 * width).max(1e-4))
}

fn split_strip<F>(
    f: &F,
    rect: Rect,
    winding: i32,
    tol: f64,
    opts: &WindingOptions,
    out: &mut Vec<LocatedInstant>,
) -> Result<()>
where
    F: Fn(Complex64) -> Result<(f64, f64)> + Sync,
{
    if winding == 0 {
        return Ok(());
    }
    let width = rect.width();
    if width < tol {
        out.push(LocatedInstant {
            lambda: 0.5 * (rect.lambda_lo + rect.lambda_hi),
            degree: winding,
        });
        return Ok(());
    }
    let h = child_height(0.5 * (rect.s_hi - rect.s_lo), 0.5 * width);
    let mid0 = 0.5 * (rect.lambda_lo + rect.lambda_hi);
    let mut last_err = None;
    for attempt in 0..2 {
        let mid = mid0 + attempt as f64 * tol / 10.0;
        let left = Rect::strip(rect.lambda_lo, mid, h);
        match winding_of(f, left, opts.strip_samples_per_side, opts) {
            Ok(lc) => {
                split_strip(f, left, lc.winding, tol, opts, out)?;
                let right = Rect::strip(mid, rect.lambda_hi, h);
                // degree additivity over the vertical split
                return split_strip(f, right, winding - lc.winding, tol, opts, out);
            }
            Err(Error::ZeroOnContour { re, im }) => {
                last_err = Some(Error::ZeroOnContour { re, im });
            }
            Err(e) => return Err(e),
        }
    }
    let _ = last_err;
    Err(Error::InstantOnBoundary { lambda: mid0 })
}
