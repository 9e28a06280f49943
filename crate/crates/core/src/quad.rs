//! Shared numerical kernels: adaptive Gauss-Kronrod quadrature with
//! inverse-square-root endpoint handling, an algebraic transform for
//! integrals running to infinity, and bracketed root finding / unimodal
//! minimization in the Brent style.

use crate::error::{Error, Result};

/// Default mixed absolute/relative quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Maximum number of adaptive bisections before giving up.
const MAX_SUBDIVISIONS: usize = 60;

/// Flags endpoints where the integrand behaves like an inverse square root.
/// That is the only singularity order the kernels support; it is removed by
/// the substitution xi = a + w^2 (resp. b - w^2) before quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularitySpec {
    pub at_lower: bool,
    pub at_upper: bool,
}

impl SingularitySpec {
    pub const NONE: Self = Self { at_lower: false, at_upper: false };
    pub const LOWER: Self = Self { at_lower: true, at_upper: false };
    pub const UPPER: Self = Self { at_lower: false, at_upper: true };
    pub const BOTH: Self = Self { at_lower: true, at_upper: true };
}

// 15-point Kronrod abscissae on [-1, 1] (positive half) and weights, with the
// embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod panel; returns (estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut result_gauss = 0.0;
    let mut result_kronrod = f_center * WGK[7];
    let mut result_abs = result_kronrod.abs();

    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        result_gauss += WG[j] * (f1 + f2);
        result_kronrod += WGK[jtw] * (f1 + f2);
        result_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    result_gauss += WG[3] * f_center;

    for j in 0..4 {
        let jtwm1 = 2 * j;
        let x = half * XGK[jtwm1];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        result_kronrod += WGK[jtwm1] * (f1 + f2);
        result_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = result_kronrod * 0.5;
    let mut result_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let result = result_kronrod * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();

    let mut err = ((result_kronrod - result_gauss) * half).abs();
    if result_asc != 0.0 && err != 0.0 {
        err = result_asc * 1.0_f64.min((200.0 * err / result_asc).powf(1.5));
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * result_abs);
    }
    (result, err)
}

/// Adaptive bisection driven by the per-panel Kronrod error estimate.
fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        if a == b {
            return Ok(0.0);
        }
        return Err(Error::Domain(format!("integrate: need a < b, got [{a}, {b}]")));
    }
    let (val, err) = gk15(f, a, b);
    if err <= tol * val.abs().max(1.0) {
        return Ok(val);
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = vec![(err, val, a, b)];
    let mut total_val = val;
    let mut total_err = err;

    for _ in 0..MAX_SUBDIVISIONS {
        if total_err <= tol * total_val.abs().max(1.0) {
            return Ok(total_val);
        }
        // split the segment with the largest error estimate
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.partial_cmp(&y.1 .0).unwrap())
            .unwrap();
        let (err0, val0, lo, hi) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval at machine resolution; keep its contribution
            segs.push((0.0, val0, lo, hi));
            total_err -= err0;
            continue;
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        total_val += v1 + v2 - val0;
        total_err += e1 + e2 - err0;
        segs.push((e1, v1, lo, mid));
        segs.push((e2, v2, mid, hi));
    }
    if total_err <= tol * total_val.abs().max(1.0) {
        Ok(total_val)
    } else {
        Err(Error::Quadrature { estimate: total_val, error_bound: total_err })
    }
}

/// Integral of `f` over (a, b), allowing inverse-square-root blow-up at the
/// flagged endpoints. Flagged ends are regularized by a square-root
/// substitution, after which an adaptive Gauss-Kronrod rule is applied. The
/// integrand is never evaluated at the endpoints themselves.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: SingularitySpec,
    tol: f64,
) -> Result<f64> {
    if !(a < b) {
        if a == b {
            return Ok(0.0);
        }
        return Err(Error::Domain(format!("integrate: need a < b, got [{a}, {b}]")));
    }
    match (spec.at_lower, spec.at_upper) {
        (false, false) => adaptive(&f, a, b, tol),
        (true, false) => {
            let wmax = (b - a).sqrt();
            adaptive(&|w: f64| 2.0 * w * f(a + w * w), 0.0, wmax, tol)
        }
        (false, true) => {
            let wmax = (b - a).sqrt();
            adaptive(&|w: f64| 2.0 * w * f(b - w * w), 0.0, wmax, tol)
        }
        (true, true) => {
            let mid = 0.5 * (a + b);
            let wlo = (mid - a).sqrt();
            let whi = (b - mid).sqrt();
            let lo = adaptive(&|w: f64| 2.0 * w * f(a + w * w), 0.0, wlo, tol * 0.5)?;
            let hi = adaptive(&|w: f64| 2.0 * w * f(b - w * w), 0.0, whi, tol * 0.5)?;
            Ok(lo + hi)
        }
    }
}

/// Integral over (0, w_max) of an integrand with a boundary layer of the
/// form c / sqrt(a + b w^2) at w = 0 (after the square-root substitution the
/// time integrals all look like this, with the layer width `r` = sqrt(a/b)
/// collapsing near the asymptotes). The substitution w = r sinh(t) flattens
/// the layer to an essentially constant integrand regardless of how small
/// `r` is.
pub fn integrate_layer<F: Fn(f64) -> f64>(f: F, w_max: f64, r: f64, tol: f64) -> Result<f64> {
    if w_max == 0.0 {
        return Ok(0.0);
    }
    if !(r > 0.0) || !r.is_finite() {
        return adaptive(&f, 0.0, w_max, tol);
    }
    let t_max = (w_max / r).asinh();
    adaptive(
        &|t: f64| {
            let w = r * t.sinh();
            f(w) * r * t.cosh()
        },
        0.0,
        t_max,
        tol,
    )
}

/// Integral of `f` over (a, +infinity) for integrands decaying at least like
/// x^(-3/2), possibly with an inverse-square-root singularity at `a`. The
/// substitution x = a + w^2/(1-w)^2 maps the half-line onto (0, 1) and
/// simultaneously removes both the singularity and the tail.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    // decay probe: f must vanish at large x and f * x^{3/2} must stay bounded
    let scale = a.abs().max(1.0);
    let probes = [1e4 * scale, 1e6 * scale, 1e8 * scale];
    let mut weighted = [0.0_f64; 3];
    for (i, &x) in probes.iter().enumerate() {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::NonDecay);
        }
        weighted[i] = fx.abs() * x.powf(1.5);
    }
    if weighted[2] > 4.0 * weighted[0].max(1e-300) && weighted[2] > 1e-12 {
        return Err(Error::NonDecay);
    }

    let g = |w: f64| {
        let om = 1.0 - w;
        let x = a + (w / om) * (w / om);
        f(x) * 2.0 * w / (om * om * om)
    };
    adaptive(&g, 0.0, 1.0, tol)
}

/// Brent's method for a bracketed root: bisection, secant, and inverse
/// quadratic interpolation. `tol` is an absolute tolerance on the bracket.
pub fn find_root<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut a = a;
    let mut b = b;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !fa.is_finite() || !fb.is_finite() || fa.signum() == fb.signum() {
        return Err(Error::Bracket { a, b, fa, fb });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    Ok(b)
}

/// Newton-bisection hybrid for a bracketed root when the derivative is
/// available analytically: Newton steps inside the bracket, bisection when
/// they leave it or stall. Converges to near machine precision.
pub fn find_root_deriv<F: Fn(f64) -> (f64, f64)>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, _) = f(a);
    if fa == 0.0 {
        return Ok(a);
    }
    let (fb, _) = f(b);
    if fb == 0.0 {
        return Ok(b);
    }
    if !fa.is_finite() || !fb.is_finite() || fa.signum() == fb.signum() {
        return Err(Error::Bracket { a, b, fa, fb });
    }
    let (mut xl, mut xh) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut rts = 0.5 * (a + b);
    let mut dxold = (b - a).abs();
    let mut dx = dxold;
    let (mut fr, mut df) = f(rts);
    for _ in 0..200 {
        let newton_bad = ((rts - xh) * df - fr) * ((rts - xl) * df - fr) > 0.0
            || 2.0 * fr.abs() > (dxold * df).abs();
        if newton_bad {
            dxold = dx;
            dx = 0.5 * (xh - xl);
            rts = xl + dx;
            if xl == rts {
                return Ok(rts);
            }
        } else {
            dxold = dx;
            dx = fr / df;
            let tmp = rts;
            rts -= dx;
            if tmp == rts {
                return Ok(rts);
            }
        }
        if dx.abs() < tol {
            return Ok(rts);
        }
        let (nf, ndf) = f(rts);
        fr = nf;
        df = ndf;
        if fr < 0.0 {
            xl = rts;
        } else {
            xh = rts;
        }
    }
    Ok(rts)
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's minimization (golden section with parabolic acceleration) on
/// [a, b]; the function is assumed unimodal there. Returns (argmin, min).
pub fn find_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut lo = a.min(b);
    let mut hi = a.max(b);
    let mut x = lo + GOLDEN * (hi - lo);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        let tol1 = tol.max(f64::EPSILON.sqrt() * x.abs());
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // parabolic fit through (v, fv), (w, fw), (x, fx)
            let r = (x - w) * (fx - fv);
            let q0 = (x - v) * (fx - fw);
            let mut p = (x - v) * q0 - (x - w) * r;
            let mut q = 2.0 * (q0 - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            e = d;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (lo - x) && p < q * (hi - x) {
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = tol1.copysign(m - x);
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { hi - x } else { lo - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                hi = x;
            } else {
                lo = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// n points spaced geometrically from a to b (both positive).
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && a > 0.0 && b > 0.0);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// n points strictly inside (a, b), clustered geometrically toward both ends.
/// `edge` is the smallest offset from an endpoint, as a fraction of (b - a).
pub fn clustered_grid(a: f64, b: f64, n: usize, edge: f64) -> Vec<f64> {
    assert!(n >= 4 && a < b && edge > 0.0 && edge < 0.5);
    let half = n / 2;
    let span = b - a;
    let lg_edge = edge.ln();
    let mut pts = Vec::with_capacity(n);
    // left half: a + span * exp(t), t from ln(edge) to ln(1/2)
    for i in 0..half {
        let t = lg_edge + (0.5_f64.ln() - lg_edge) * i as f64 / half as f64;
        pts.push(a + span * t.exp());
    }
    // right half mirrored
    for i in (0..(n - half)).rev() {
        let t = lg_edge + (0.5_f64.ln() - lg_edge) * i as f64 / (n - half) as f64;
        pts.push(b - span * t.exp());
    }
    pts.dedup();
    pts
}

/// Scan `f` over the given ordered grid and return each bracketing pair
/// where the sign changes (NaN samples break the scan).
pub fn sign_change_brackets<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let fx = f(x);
        if !fx.is_finite() {
            prev = None;
            continue;
        }
        if fx == 0.0 {
            // exact zero at a grid point: a degenerate bracket, and the scan
            // restarts so the root is not double-counted
            out.push((x, x));
            prev = None;
            continue;
        }
        if let Some((px, pfx)) = prev {
            if pfx.signum() != fx.signum() {
                out.push((px, x));
            }
        }
        prev = Some((x, fx));
    }
    out
}
