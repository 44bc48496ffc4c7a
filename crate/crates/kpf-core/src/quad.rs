//! Gauss-Legendre quadrature.
//!
//! Nodes and weights are computed by Newton iteration on the Legendre
//! recurrence, so there are no tables to run out of and the results are
//! deterministic. Composite rules split [0, T] into equal panels of at most
//! eight nodes each; a single panel keeps the full 2n-1 polynomial exactness
//! that small-node tests rely on.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// ascending by node.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss-Legendre rule on [0, t_end] with at least `nodes` points.
/// Up to 16 requested nodes the rule is a single panel (so an n-point request
/// integrates polynomials of degree 2n-1 exactly); beyond that, equal panels
/// of 8 points each. Returns (nodes, weights) with nodes strictly inside
/// (0, t_end) and weights summing to t_end.
pub fn composite_on_interval(t_end: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(t_end > 0.0);
    assert!(nodes >= 1);
    let (panels, per_panel) = if nodes <= 16 {
        (1, nodes)
    } else {
        (nodes.div_ceil(8), 8)
    };
    let (base_x, base_w) = gauss_legendre(per_panel);
    let h = t_end / panels as f64;
    let mut ts = Vec::with_capacity(panels * per_panel);
    let mut ws = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let a = p as f64 * h;
        for (x, w) in base_x.iter().zip(&base_w) {
            ts.push(a + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (ts, ws)
}
