//! Flow integration against a hand-written fixed-step RK4 and the conservation
//! of `X_n delta` for divergence-free `X`.

use divlab::fields::{field_from_registry, VectorField};
use divlab::rigidity::integrate_flow;

/// RK4 in the height variable: `dx/dy = X_1 / X_2`, which avoids locating the
/// arrival time.
fn rk4_height(f: &VectorField, p: [f64; 2], h: f64, steps: usize) -> [f64; 2] {
    let slope = |x: f64, y: f64| {
        let v = f.eval(&[x, y]).unwrap();
        v[0] / v[1]
    };
    let dy = (h - p[1]) / steps as f64;
    let (mut x, mut y) = (p[0], p[1]);
    for _ in 0..steps {
        let k1 = slope(x, y);
        let k2 = slope(x + 0.5 * dy * k1, y + 0.5 * dy);
        let k3 = slope(x + 0.5 * dy * k2, y + 0.5 * dy);
        let k4 = slope(x + dy * k3, y + dy);
        x += dy / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        y += dy;
    }
    [x, y]
}

fn tilted_bump(eps_factor: f64) -> VectorField {
    let eta = field_from_registry("stream:bump").unwrap();
    let eps = eps_factor * eta.sup_bound;
    eta.plus_constant(&[0.0, eps])
}

#[test]
fn endpoint_matches_rk4_reference() {
    let x = tilted_bump(2.0);
    for p in [[-0.3, 0.0], [0.0, 0.5], [0.45, 1.2], [0.8, -1.0]] {
        let st = integrate_flow(&x, &p, 4.0).unwrap();
        let want = rk4_height(&x, p, 4.0, 20_000);
        assert!((st.position[1] - 4.0).abs() < 1e-10, "{:?}", st.position);
        assert!((st.position[0] - want[0]).abs() < 1e-8, "{p:?}: {:?} vs {want:?}", st.position);
    }
}

#[test]
fn delta_times_vertical_component_is_conserved() {
    let x = tilted_bump(1.5);
    for p in [[-0.2, 0.3], [0.3, 1.0], [0.0, 1.9]] {
        let st = integrate_flow(&x, &p, 3.5).unwrap();
        let start = x.eval(&p).unwrap()[1];
        let end = x.eval(&st.position).unwrap()[1];
        assert!((st.delta * end - start).abs() < 1e-8, "{p:?}: delta {} X_n {start} -> {end}", st.delta);
    }
}

#[test]
fn downward_flow_reverses_upward_flow() {
    let x = tilted_bump(2.0);
    let up = integrate_flow(&x, &[0.1, 0.0], 3.0).unwrap();
    let back = integrate_flow(&x, &up.position, 0.0).unwrap();
    assert!(up.t > 0.0 && back.t < 0.0);
    assert!((back.position[0] - 0.1).abs() < 1e-8);
    assert!((up.delta * back.delta - 1.0).abs() < 1e-8);
}

#[test]
fn vanishing_vertical_component_is_reported() {
    // eps below the sup lets the flow stall inside the bump
    let x = tilted_bump(0.0);
    assert!(integrate_flow(&x, &[0.0, 1.5], 3.0).is_err());
}
