//! Complete elliptic integrals, Gauss-Legendre rules and the ring-charge
//! kernel built from them.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Complete elliptic integrals `(K(m), E(m))` given the complementary
/// parameter `mc = 1 - m`, by the arithmetic-geometric mean.
pub fn ellip_ke(mc: f64) -> (f64, f64) {
    debug_assert!(mc > 0.0 && mc <= 1.0 + 1e-15, "mc = {mc}");
    let m = 1.0 - mc;
    let mut a = 1.0;
    let mut b = mc.sqrt();
    let mut c = m.max(0.0).sqrt();
    let mut pow2 = 0.5;
    let mut sum = pow2 * c * c;
    for _ in 0..40 {
        if c.abs() < 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// `dK/dm`, switching to the power series near `m = 0` where the closed
/// form cancels.
pub fn ellip_k_derivative(m: f64, mc: f64, k: f64, e: f64) -> f64 {
    if m < 1e-4 {
        PI / 2.0 * (0.25 + 9.0 / 32.0 * m + 75.0 / 256.0 * m * m + 1225.0 / 4096.0 * m * m * m)
    } else {
        (e - mc * k) / (2.0 * m * mc)
    }
}

pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

const MAX_ORDER: usize = 16;

/// Gauss-Legendre rule on `[-1, 1]` with `n` points, `1 <= n <= 16`.
pub fn gauss(n: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=MAX_ORDER).map(legendre_rule).collect());
    &rules[n.clamp(1, MAX_ORDER) - 1]
}

/// Potential and `(d/drho, d/dz)` derivatives at `(rho, z)` of a ring of
/// radius `a` at height `zs` carrying total "charge" `q/eps0 = 1`.
#[inline]
pub fn ring_potential_gradient(a: f64, zs: f64, rho: f64, z: f64) -> (f64, f64, f64) {
    let dz = z - zs;
    let big2 = (rho + a) * (rho + a) + dz * dz;
    let small2 = (rho - a) * (rho - a) + dz * dz;
    let big = big2.sqrt();
    let m = 4.0 * a * rho / big2;
    let mc = small2 / big2;
    let (k, e) = ellip_ke(mc);
    let c = 1.0 / (2.0 * PI * PI);
    let phi = c * k / big;
    let dphi_dz = -c * dz * e / (big * small2);
    let dk = ellip_k_derivative(m, mc, k, e);
    let dphi_drho = c / (big2 * big) * (dk * 4.0 * a * (a * a - rho * rho + dz * dz) / big2 - k * (rho + a));
    (phi, dphi_drho, dphi_dz)
}

/// Potential only, split into a part that is smooth as the observation
/// point approaches the ring and the coefficient of `-ln d`, where `d` is
/// the meridian-plane distance to the ring. `phi = smooth - coeff * ln d`.
#[inline]
pub fn ring_potential_split(a: f64, zs: f64, rho: f64, z: f64) -> (f64, f64) {
    let dz = z - zs;
    let big2 = (rho + a) * (rho + a) + dz * dz;
    let small2 = (rho - a) * (rho - a) + dz * dz;
    let big = big2.sqrt();
    let mc = small2 / big2;
    let c = 1.0 / (2.0 * PI * PI);
    if mc <= 0.0 {
        // K + ln(sqrt(mc))/... tends to ln 4 at the ring itself.
        return (c * (4f64.ln() + big.ln()) / big, c / big);
    }
    let (k, _) = ellip_ke(mc);
    // K = Ks - ln d + ln D with Ks smooth.
    let ks = k + 0.5 * mc.ln();
    (c * (ks + big.ln()) / big, c / big)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elliptic_reference_values() {
        // K(0.5), E(0.5) from standard tables.
        let (k, e) = ellip_ke(0.5);
        assert!((k - 1.854_074_677_301_372).abs() < 1e-13);
        assert!((e - 1.350_643_881_047_675).abs() < 1e-13);
        let (k0, e0) = ellip_ke(1.0);
        assert!((k0 - PI / 2.0).abs() < 1e-15 && (e0 - PI / 2.0).abs() < 1e-15);
        // K(m) ~ ln(4/sqrt(mc)) for m -> 1.
        let mc = 1e-12;
        let (k1, e1) = ellip_ke(mc);
        assert!((k1 - (4.0 / mc.sqrt()).ln()).abs() < 1e-9);
        assert!((e1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn k_derivative_matches_difference() {
        for &m in &[1e-6f64, 5e-5, 1e-3, 0.3, 0.9, 0.999] {
            let h = 1e-3 * m.min(1.0 - m);
            let kp = ellip_ke(1.0 - (m + h)).0;
            let km = ellip_ke(1.0 - (m - h)).0;
            let (k, e) = ellip_ke(1.0 - m);
            let d = ellip_k_derivative(m, 1.0 - m, k, e);
            assert!(((kp - km) / (2.0 * h) - d).abs() / d < 1e-6, "m = {m}: fd {} analytic {d}", (kp - km) / (2.0 * h));
        }
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 1..=16 {
            let r = gauss(n);
            let deg = 2 * n - 1;
            let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn ring_on_axis_is_point_like() {
        let (phi, drho, dz) = ring_potential_gradient(1.0, 0.0, 0.0, 2.0);
        let r = 5f64.sqrt();
        assert!((phi - 1.0 / (4.0 * PI * r)).abs() < 1e-15);
        assert_eq!(drho, 0.0);
        assert!((dz + 2.0 / (4.0 * PI * r * r * r)).abs() < 1e-14);
    }

    #[test]
    fn ring_gradient_matches_finite_difference() {
        let (a, zs) = (1.3, 0.2);
        for &(rho, z) in &[(0.01, 0.5), (0.7, -0.4), (2.5, 1.1), (1.25, 0.25)] {
            let h = 1e-6;
            let (_, drho, dz) = ring_potential_gradient(a, zs, rho, z);
            let fr = (ring_potential_gradient(a, zs, rho + h, z).0 - ring_potential_gradient(a, zs, rho - h, z).0) / (2.0 * h);
            let fz = (ring_potential_gradient(a, zs, rho, z + h).0 - ring_potential_gradient(a, zs, rho, z - h).0) / (2.0 * h);
            assert!((fr - drho).abs() < 1e-7 * (1.0 + drho.abs()), "{rho},{z}: {fr} vs {drho}");
            assert!((fz - dz).abs() < 1e-7 * (1.0 + dz.abs()), "{rho},{z}: {fz} vs {dz}");
        }
    }

    #[test]
    fn split_reassembles_potential() {
        let (a, zs) = (1.0, 0.0);
        for &(rho, z) in &[(1.1, 0.05), (0.5, 0.3), (3.0, 2.0)] {
            let (s, c) = ring_potential_split(a, zs, rho, z);
            let d = ((rho - a) * (rho - a) + (z - zs) * (z - zs)).sqrt();
            let phi = ring_potential_gradient(a, zs, rho, z).0;
            assert!((s - c * d.ln() - phi).abs() < 1e-13 * phi.abs().max(1.0));
        }
    }
}
