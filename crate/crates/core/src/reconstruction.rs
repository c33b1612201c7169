//! The physical flow behind a profile `w`: conformal map of the strip
//! `−kh ≤ y ≤ 0` onto the fluid domain, free surface, stream function,
//! Bernoulli residual and admissibility checks.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::operators::{FlowParameters, WaveOperators};
use crate::trig::{GridFunction, TrigSeries};
use crate::{Error, Result};

/// `sinh(n(y+d))/sinh(nd)` and `cosh(n(y+d))/sinh(nd)` for `−d ≤ y ≤ 0`,
/// written with decaying exponentials only.
fn strip_factors(n: f64, y: f64, d: f64) -> (f64, f64) {
    let lead = libm::exp(n * y);
    let tail = libm::exp(-2.0 * n * (y + d));
    let denom = -libm::expm1(-2.0 * n * d);
    (lead * (1.0 - tail) / denom, lead * (1.0 + tail) / denom)
}

/// Harmonic function on the strip `−d < y < 0` with trace `top` at `y = 0`
/// and the constant value `bottom` at `y = −d`, together with its harmonic
/// conjugate `G` (`F + iG` holomorphic in `x + iy`).
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicExtension {
    top: TrigSeries,
    depth: f64,
    bottom: f64,
}

impl HarmonicExtension {
    pub fn new(top: TrigSeries, kh: f64, bottom: f64) -> Result<Self> {
        if !(kh > 0.0 && kh.is_finite()) {
            return Err(Error::InvalidDepth { kh });
        }
        Ok(Self { top, depth: kh, bottom })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn top(&self) -> &TrigSeries {
        &self.top
    }

    /// Slope of the affine part, `([top] − bottom)/d`.
    pub fn slope(&self) -> f64 {
        (self.top.mean() - self.bottom) / self.depth
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let mut v = self.top.mean() + self.slope() * y;
        for n in 1..=self.top.order() {
            let nf = n as f64;
            let (s, _) = strip_factors(nf, y, self.depth);
            let (sn, cn) = libm::sincos(nf * x);
            v += (self.top.a(n) * cn + self.top.b(n) * sn) * s;
        }
        v
    }

    /// Harmonic conjugate, normalized to vanish with the oscillating part at
    /// `x = 0`; the affine part contributes `−slope·x`.
    pub fn conjugate(&self, x: f64, y: f64) -> f64 {
        let mut v = -self.slope() * x;
        for n in 1..=self.top.order() {
            let nf = n as f64;
            let (_, c) = strip_factors(nf, y, self.depth);
            let (sn, cn) = libm::sincos(nf * x);
            v += (-self.top.a(n) * sn + self.top.b(n) * cn) * c;
        }
        v
    }

    /// `(∂ₓF, ∂ᵧF)`.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (mut fx, mut fy) = (0.0, self.slope());
        for n in 1..=self.top.order() {
            let nf = n as f64;
            let (s, c) = strip_factors(nf, y, self.depth);
            let (sn, cn) = libm::sincos(nf * x);
            let (a, b) = (self.top.a(n), self.top.b(n));
            fx += nf * (-a * sn + b * cn) * s;
            fy += nf * (a * cn + b * sn) * c;
        }
        (fx, fy)
    }
}

/// Coefficients of `w²` for an even `w`, exactly, at order `2N`.
fn square_even(w: &TrigSeries) -> TrigSeries {
    let order = w.order();
    let mut cos = vec![0.0; 2 * order];
    let mut mean = w.mean() * w.mean();
    for i in 1..=order {
        let ai = w.a(i);
        cos[i - 1] += 2.0 * w.mean() * ai;
        for j in 1..=order {
            let aj = w.a(j);
            // cos it cos jt = (cos(i+j)t + cos(i−j)t)/2
            cos[i + j - 1] += 0.5 * ai * aj;
            if i == j {
                mean += 0.5 * ai * aj;
            } else {
                cos[i.abs_diff(j) - 1] += 0.5 * ai * aj;
            }
        }
    }
    TrigSeries::new(mean, cos, vec![0.0; 2 * order])
}

/// `U + iV` on the strip `−kh ≤ y ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMap {
    vertical: HarmonicExtension,
}

impl ConformalMap {
    /// `V` has trace `w/k` on top and `−h` on the bed; `U` is its conjugate,
    /// so that `U(x, 0) = (x + 𝒞ₖₕw(x))/k`.
    pub fn new(params: &FlowParameters, w: &TrigSeries) -> Result<Self> {
        let vertical = HarmonicExtension::new(w.even_part().scaled(1.0 / params.k), params.kh(), -params.h)?;
        Ok(Self { vertical })
    }

    /// Physical point `(X, Y)` for the strip point `(x, y)`.
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (-self.vertical.conjugate(x, y), self.vertical.value(x, y))
    }

    /// `Φ'(z) = Uₓ + iVₓ = Vᵧ + iVₓ`.
    pub fn derivative(&self, x: f64, y: f64) -> (f64, f64) {
        let (vx, vy) = self.vertical.gradient(x, y);
        (vy, vx)
    }

    /// `|Φ'|²`.
    pub fn jacobian(&self, x: f64, y: f64) -> f64 {
        let (a, b) = self.derivative(x, y);
        a * a + b * b
    }

    /// Slope of the affine part of `V`: `1/k` when the conformal mean depth is `h`.
    pub fn depth_slope(&self) -> f64 {
        self.vertical.slope()
    }

    pub fn vertical(&self) -> &HarmonicExtension {
        &self.vertical
    }
}

/// `ψ∘Φ = ζ − m − γV²/2` with `ζ` harmonic, `ζ = m + γw²/(2k²)` on top and
/// `ζ = γh²/2` on the bed, so that `ψ = 0` on the surface and `ψ = −m` on the bed.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFunction {
    zeta: HarmonicExtension,
    map: ConformalMap,
    m: f64,
    gamma: f64,
}

impl StreamFunction {
    pub fn new(params: &FlowParameters, m: f64, w: &TrigSeries) -> Result<Self> {
        let mut top = square_even(&w.even_part()).scaled(params.gamma / (2.0 * params.k * params.k));
        top.set_mean(top.mean() + m);
        let zeta = HarmonicExtension::new(top, params.kh(), params.gamma * params.h * params.h / 2.0)?;
        Ok(Self { zeta, map: ConformalMap::new(params, w)?, m, gamma: params.gamma })
    }

    /// `ψ(Φ(x, y))`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let v = self.map.vertical.value(x, y);
        self.zeta.value(x, y) - self.m - 0.5 * self.gamma * v * v
    }

    /// Gradient of `ψ∘Φ` in strip coordinates.
    pub fn strip_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let v = self.map.vertical.value(x, y);
        let (vx, vy) = self.map.vertical.gradient(x, y);
        let (zx, zy) = self.zeta.gradient(x, y);
        (zx - self.gamma * v * vx, zy - self.gamma * v * vy)
    }

    /// `|∇ψ|²` at the physical point `Φ(x, y)`.
    pub fn speed_squared(&self, x: f64, y: f64) -> f64 {
        let (px, py) = self.strip_gradient(x, y);
        (px * px + py * py) / self.map.jacobian(x, y)
    }

    pub fn map(&self) -> &ConformalMap {
        &self.map
    }
}

/// Margins and verdicts of the three admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// `min(w + kh)` on the grid; positive when the surface stays above the bed.
    pub above_bed_margin: f64,
    pub above_bed: bool,
    /// `minₜ Wkh`.
    pub wkh_margin: f64,
    pub wkh_nonzero: bool,
    /// Smallest distance between non-adjacent segments of the surface polygon
    /// and its translates by one period; zero when they cross.
    pub injectivity_margin: f64,
    pub injective: bool,
}

impl Admissibility {
    pub fn passed(&self) -> bool {
        self.above_bed && self.wkh_nonzero && self.injective
    }
}

type Point = (f64, f64);

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection by orientation tests.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    libm::hypot(p.0 - a.0 - t * dx, p.1 - a.1 - t * dy)
}

pub fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Smallest distance between non-adjacent edges of the periodic polygon
/// through `vertices` (one period, the next period starting at
/// `vertices[0] + (period, 0)`), including edges of the translates by
/// `±period`. Returns 0 on any crossing.
pub fn periodic_polygon_margin(vertices: &[Point], period: f64) -> f64 {
    let count = vertices.len();
    assert!(count >= 3);
    let vertex = |j: usize| vertices[j];
    let edge = |i: usize, shift: f64| -> (Point, Point) {
        let a = vertex(i);
        let b = if i + 1 == count { (vertices[0].0 + period, vertices[0].1) } else { vertex(i + 1) };
        ((a.0 + shift, a.1), (b.0 + shift, b.1))
    };
    let mut margin = f64::INFINITY;
    for i in 0..count {
        let (a, b) = edge(i, 0.0);
        // Same period: edges j > i + 1, except the wrap-around neighbour.
        for j in i + 2..count {
            if i == 0 && j == count - 1 {
                continue;
            }
            let (c, d) = edge(j, 0.0);
            margin = margin.min(segment_distance(a, b, c, d));
        }
        // Next period: edge 0 shifted is adjacent to edge count − 1.
        for j in 0..count {
            if i == count - 1 && j == 0 {
                continue;
            }
            let (c, d) = edge(j, period);
            margin = margin.min(segment_distance(a, b, c, d));
        }
        if margin == 0.0 {
            return 0.0;
        }
    }
    margin
}

/// Checks `w > −kh`, `Wkh ≠ 0` and injectivity of `t ↦ (t + 𝒞ₖₕw, w)` on
/// the grid of `ops`.
pub fn admissibility(ops: &WaveOperators, w: &TrigSeries) -> Result<Admissibility> {
    let kh = ops.params().kh();
    let s = ops.surface(w)?;
    let above_bed_margin = s.w.min() + kh;
    let wkh_margin = s.wkh.min();
    let cw = ops.collocation().synthesize(&ops.conj(w)?);
    let nodes = ops.collocation().nodes();
    let vertices: Vec<Point> = (0..nodes.len()).map(|j| (nodes[j] + cw.values()[j], s.w.values()[j])).collect();
    let injectivity_margin = periodic_polygon_margin(&vertices, 2.0 * PI);
    Ok(Admissibility {
        above_bed_margin,
        above_bed: above_bed_margin > 0.0,
        wkh_margin,
        wkh_nonzero: wkh_margin > 0.0,
        injectivity_margin,
        injective: injectivity_margin > 0.0,
    })
}

/// One surface sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Pointwise `|∇ψ|² + 2gv − 2σ(uₜvₜₜ − uₜₜvₜ)/(uₜ² + vₜ²)^{3/2} − Q` along the
/// surface `(u, v) = ((t + 𝒞ₖₕw)/k, w/k)` on the grid.
pub fn bernoulli_residual(
    ops: &WaveOperators,
    stream: &StreamFunction,
    w: &TrigSeries,
    q: f64,
) -> Result<GridFunction> {
    let p = ops.params();
    let s = ops.surface(w)?;
    let nodes = ops.collocation().nodes();
    let k = p.k;
    let mut vals = Vec::with_capacity(nodes.len());
    for (j, &t) in nodes.iter().enumerate() {
        let ut = (1.0 + s.cdw.values()[j]) / k;
        let vt = s.dw.values()[j] / k;
        let utt = s.cd2w.values()[j] / k;
        let vtt = s.d2w.values()[j] / k;
        let speed2 = ut * ut + vt * vt;
        if !(speed2 > 0.0) {
            return Err(Error::StagnantConfiguration { min_wkh: speed2 * k * k });
        }
        let curvature = (ut * vtt - utt * vt) / (speed2 * libm::sqrt(speed2));
        let (_, psi_y) = stream.strip_gradient(t, 0.0);
        let grad2 = psi_y * psi_y / speed2;
        vals.push(grad2 + 2.0 * p.g * s.w.values()[j] / k - 2.0 * p.sigma * curvature - q);
    }
    Ok(GridFunction::new(vals))
}

/// Physical solution for a profile `w` at parameter `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalSolution {
    pub params: FlowParameters,
    pub lambda: f64,
    pub m: f64,
    pub q: f64,
    pub w: TrigSeries,
    /// Surface samples at the grid nodes.
    pub surface: Vec<SurfacePoint>,
    pub stream: StreamFunction,
    /// `2π/k`.
    pub period: f64,
}

impl PhysicalSolution {
    pub fn new(ops: &WaveOperators, lambda: f64, w: &TrigSeries) -> Result<Self> {
        let params = *ops.params();
        let q = ops.q_value(lambda, w)?;
        let m = params.m_from_lambda(lambda);
        let stream = StreamFunction::new(&params, m, w)?;
        let col = ops.collocation();
        let cw = col.synthesize(&ops.conj(w)?);
        let wg = col.synthesize(w);
        let surface = col
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &t)| SurfacePoint { t, x: (t + cw.values()[j]) / params.k, y: wg.values()[j] / params.k })
            .collect();
        Ok(Self { params, lambda, m, q, w: w.clone(), surface, stream, period: 2.0 * PI / params.k })
    }

    pub fn map(&self) -> &ConformalMap {
        self.stream.map()
    }

    /// Runs the boundary, interior and Bernoulli checks.
    pub fn validate(&self, ops: &WaveOperators, checks: &ValidationSettings) -> Result<ValidationReport> {
        let kh = self.params.kh();
        let nodes = ops.collocation().nodes();
        let map = self.map();
        let mut psi_surface: f64 = 0.0;
        let mut psi_bed: f64 = 0.0;
        let mut map_trace: f64 = 0.0;
        let mut map_derivative: f64 = 0.0;
        let wkh = ops.wkh(&self.w)?;
        for (j, &t) in nodes.iter().enumerate() {
            psi_surface = psi_surface.max(self.stream.value(t, 0.0).abs());
            psi_bed = psi_bed.max((self.stream.value(t, -kh) + self.m).abs());
            let (x, y) = map.map(t, 0.0);
            let sp = self.surface[j];
            map_trace = map_trace.max((x - sp.x).abs()).max((y - sp.y).abs());
            let k2 = self.params.k * self.params.k;
            map_derivative = map_derivative.max((map.jacobian(t, 0.0) - wkh.values()[j] / k2).abs());
        }
        let hs = checks.fd_step;
        let mut laplacian: f64 = 0.0;
        let mut cauchy_riemann: f64 = 0.0;
        let nx = checks.lattice;
        for i in 0..nx {
            for l in 0..nx {
                let x = 2.0 * PI * (i as f64 + 0.37) / nx as f64;
                let y = -(kh - 2.0 * checks.edge_gap) * (l as f64 + 0.5) / nx as f64 - checks.edge_gap;
                let y = y.clamp(-kh + hs + checks.edge_gap, -hs - checks.edge_gap);
                let f = |x: f64, y: f64| self.stream.value(x, y);
                let lap = (f(x + hs, y) + f(x - hs, y) + f(x, y + hs) + f(x, y - hs) - 4.0 * f(x, y)) / (hs * hs);
                laplacian = laplacian.max((lap + self.params.gamma * map.jacobian(x, y)).abs());
                let (ux, uy) = {
                    let (a, _) = map.map(x + hs, y);
                    let (b, _) = map.map(x - hs, y);
                    let (c, _) = map.map(x, y + hs);
                    let (d, _) = map.map(x, y - hs);
                    ((a - b) / (2.0 * hs), (c - d) / (2.0 * hs))
                };
                let (vx, vy) = {
                    let (_, a) = map.map(x + hs, y);
                    let (_, b) = map.map(x - hs, y);
                    let (_, c) = map.map(x, y + hs);
                    let (_, d) = map.map(x, y - hs);
                    ((a - b) / (2.0 * hs), (c - d) / (2.0 * hs))
                };
                cauchy_riemann = cauchy_riemann.max((ux - vy).abs()).max((uy + vx).abs());
            }
        }
        let bernoulli = bernoulli_residual(ops, &self.stream, &self.w, self.q)?.sup_norm();
        let admissibility = admissibility(ops, &self.w)?;
        let surface_mean = self.surface.iter().map(|p| p.y).sum::<f64>() / self.surface.len() as f64;
        Ok(ValidationReport {
            psi_surface,
            psi_bed,
            map_trace,
            map_derivative,
            laplacian,
            cauchy_riemann,
            bernoulli,
            surface_mean,
            depth_slope_error: (map.depth_slope() - 1.0 / self.params.k).abs(),
            admissibility,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSettings {
    /// Interior points per direction.
    pub lattice: usize,
    pub fd_step: f64,
    /// Distance kept from `y = 0` and `y = −kh`.
    pub edge_gap: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self { lattice: 10, fd_step: 1e-3, edge_gap: 1e-8 }
    }
}

/// Residual sups of a reconstructed solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// `sup |ψ|` on the surface.
    pub psi_surface: f64,
    /// `sup |ψ + m|` on the bed.
    pub psi_bed: f64,
    /// Map trace at `y = 0` against the surface formula.
    pub map_trace: f64,
    /// `| |Φ'|² − Wkh/k² |` at `y = 0`.
    pub map_derivative: f64,
    /// Five-point Laplacian of `ψ∘Φ` plus `γ|Φ'|²`.
    pub laplacian: f64,
    pub cauchy_riemann: f64,
    pub bernoulli: f64,
    pub surface_mean: f64,
    pub depth_slope_error: f64,
    pub admissibility: Admissibility,
}

impl ValidationReport {
    pub fn passed(&self, tol: &ReconstructionTolerances) -> bool {
        self.psi_surface <= tol.boundary
            && self.psi_bed <= tol.boundary
            && self.laplacian <= tol.interior
            && self.cauchy_riemann <= tol.interior
            && self.bernoulli <= tol.bernoulli
            && self.admissibility.passed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionTolerances {
    pub boundary: f64,
    pub interior: f64,
    pub bernoulli: f64,
}

impl Default for ReconstructionTolerances {
    fn default() -> Self {
        Self { boundary: 1e-9, interior: 1e-6, bernoulli: 1e-6 }
    }
}
