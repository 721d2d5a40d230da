//! Named model kernels.

use crate::error::Result;
use crate::model::HoppingKernel;
use crate::{C64, CMatrix};
use ndarray::array;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Honeycomb lattice with complex next-nearest-neighbour hopping, written on
/// the square index lattice with a two-site cell (sublattices A, B).
///
/// Bloch symbol: `h_x + i h_y` pairing with `f(k) = t1 (1 + e^{-ik_1} +
/// e^{-ik_2})`, staggered mass `±m`, and sublattice-resolved second-neighbour
/// terms: the A sublattice acquires phase `+φ` along the chiral triple
/// `{e_1, e_2−e_1, −e_2}` (B the opposite), so the mass at the two Dirac
/// points is `m ± 3√3 t2 sin φ` and gaps close on the critical lines
/// `|m| = 3√3 |t2 sin φ|`.
pub fn haldane(t1: f64, t2: f64, phi: f64, m: f64) -> Result<HoppingKernel> {
    let mut k = HoppingKernel::new(2, 2);
    let zero = c(0.0, 0.0);
    let e_plus = C64::from_polar(t2, phi);
    let e_minus = C64::from_polar(t2, -phi);
    k.add_onsite(array![[c(m, 0.0), c(t1, 0.0)], [c(t1, 0.0), c(-m, 0.0)]])?;
    // Nearest neighbours across cells: A(l+e) <- B(l).
    k.add_hop([1, 0, 0], array![[e_plus, c(t1, 0.0)], [zero, e_minus]])?;
    k.add_hop([0, 1, 0], array![[e_minus, c(t1, 0.0)], [zero, e_plus]])?;
    // Remaining second-neighbour pair: +φ on A along e_2 − e_1, so the
    // stored direction e_1 − e_2 carries the conjugate phase.
    k.add_hop([1, -1, 0], array![[e_minus, zero], [zero, e_plus]])?;
    Ok(k)
}

/// Square-lattice nearest-neighbour hopping with a single orbital; all the
/// field dependence enters through the dressing phases, producing the
/// classic fractal gap structure at rational flux.
pub fn hofstadter(t: f64) -> Result<HoppingKernel> {
    let mut k = HoppingKernel::new(2, 1);
    k.add_hop([1, 0, 0], array![[c(t, 0.0)]])?;
    k.add_hop([0, 1, 0], array![[c(t, 0.0)]])?;
    Ok(k)
}

/// Dimerised chain with staggered on-site energy: intra-cell hop `t + δ`,
/// inter-cell hop `t - δ`, sublattice potential `±Δ`. Driving `(δ, Δ)` around
/// the origin pumps one charge per cycle.
pub fn rice_mele(t: f64, delta: f64, stagger: f64) -> Result<HoppingKernel> {
    let mut k = HoppingKernel::new(1, 2);
    k.add_onsite(array![
        [c(stagger, 0.0), c(t + delta, 0.0)],
        [c(t + delta, 0.0), c(-stagger, 0.0)]
    ])?;
    // B in cell l couples to A in cell l+1.
    k.add_hop(
        [1, 0, 0],
        array![[c(0.0, 0.0), c(t - delta, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]],
    )?;
    Ok(k)
}

/// Hypercubic nearest-neighbour hopping in `d` dimensions with one orbital;
/// combined with uniform on-site disorder this is the standard localization
/// testbed.
pub fn anderson(dim: usize, t: f64) -> Result<HoppingKernel> {
    let mut k = HoppingKernel::new(dim, 1);
    for axis in 0..dim {
        let mut m = [0i64; 3];
        m[axis] = 1;
        k.add_hop(m, array![[c(t, 0.0)]])?;
    }
    Ok(k)
}

/// The three decoupled basis kernels of the dimerised chain, used to build
/// time-dependent pump paths: returns `(H_t, H_δ, H_Δ)` cell blocks such that
/// `rice_mele(t, δ, Δ) = t·K_t + δ·K_δ + Δ·K_Δ`.
pub fn rice_mele_components() -> Result<[HoppingKernel; 3]> {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let mut kt = HoppingKernel::new(1, 2);
    kt.add_onsite(array![[zero, one], [one, zero]])?;
    kt.add_hop([1, 0, 0], array![[zero, one], [zero, zero]])?;
    let mut kd = HoppingKernel::new(1, 2);
    kd.add_onsite(array![[zero, one], [one, zero]])?;
    kd.add_hop([1, 0, 0], array![[zero, -one], [zero, zero]])?;
    let mut ks = HoppingKernel::new(1, 2);
    ks.add_onsite(array![[one, zero], [zero, -one]])?;
    Ok([kt, kd, ks])
}

/// Pauli matrices, handy for two-level paths and spin rotations.
pub fn pauli() -> [CMatrix; 3] {
    [
        array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, hermiticity_defect};
    use std::f64::consts::PI;

    #[test]
    fn haldane_gap_closes_on_critical_line() {
        // At |m| = 3√3 t2 sinφ the gap closes at a Dirac point.
        let t2 = 0.2;
        let phi = PI / 2.0;
        let mc = 3.0 * 3.0f64.sqrt() * t2 * phi.sin();
        let k = haldane(1.0, t2, phi, mc).unwrap();
        // Dirac points of the honeycomb in these coordinates: K = (2π/3, -2π/3).
        let mut gap_min = f64::INFINITY;
        let n = 120;
        for i in 0..n {
            for j in 0..n {
                let kk = [
                    2.0 * PI * i as f64 / n as f64,
                    2.0 * PI * j as f64 / n as f64,
                    0.0,
                ];
                let (vals, _) = eigh(&k.bloch(kk));
                gap_min = gap_min.min(vals[1] - vals[0]);
            }
        }
        assert!(gap_min < 0.02, "gap {gap_min} should close at criticality");
        // Away from the line the gap is open.
        let k2 = haldane(1.0, t2, phi, 0.0).unwrap();
        let mut gap2 = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let kk = [
                    2.0 * PI * i as f64 / n as f64,
                    2.0 * PI * j as f64 / n as f64,
                    0.0,
                ];
                let (vals, _) = eigh(&k2.bloch(kk));
                gap2 = gap2.min(vals[1] - vals[0]);
            }
        }
        assert!(gap2 > 0.5, "topological phase should be well gapped, got {gap2}");
    }

    #[test]
    fn rice_mele_components_assemble() {
        let [kt, kd, ks] = rice_mele_components().unwrap();
        let full = rice_mele(1.0, 0.3, -0.4).unwrap();
        let kk = [0.7, 0.0, 0.0];
        let assembled = &(&kt.bloch(kk) * c(1.0, 0.0) + &kd.bloch(kk) * c(0.3, 0.0))
            + &(&ks.bloch(kk) * c(-0.4, 0.0));
        let diff = (&assembled - &full.bloch(kk))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }

    #[test]
    fn catalog_kernels_are_hermitian() {
        for k in [
            haldane(1.0, 0.3, 1.0, 0.2).unwrap(),
            hofstadter(1.0).unwrap(),
            rice_mele(1.0, 0.2, 0.3).unwrap(),
            anderson(3, 1.0).unwrap(),
        ] {
            assert!(k.hermiticity_defect() < 1e-14);
            assert!(hermiticity_defect(&k.bloch([0.3, 0.9, -0.2])) < 1e-13);
        }
    }
}
