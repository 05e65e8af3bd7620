//! Exhaustive path enumeration for small hidden Markov models.

/// Probability-space model description. `emission[t][k]` is the emission
/// density of observation `t` under state `k` (1.0 for a missing observation).
pub struct PathModel<'a> {
    pub pi: &'a [f64],
    pub trans: &'a [Vec<f64>],
    pub emission: &'a [Vec<f64>],
}

/// Returns `(ln P(data), smoothed marginals)` by summing over all `K^T` paths.
pub fn enumerate(model: &PathModel<'_>) -> (f64, Vec<Vec<f64>>) {
    let k = model.pi.len();
    let t_len = model.emission.len();
    let mut marg = vec![vec![0.0; k]; t_len];
    let mut total = 0.0;
    let mut path = vec![0usize; t_len];
    let n_paths = k.pow(t_len as u32);
    for code in 0..n_paths {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let mut prob = model.pi[path[0]] * model.emission[0][path[0]];
        for t in 1..t_len {
            prob *= model.trans[path[t - 1]][path[t]] * model.emission[t][path[t]];
        }
        total += prob;
        for t in 0..t_len {
            marg[t][path[t]] += prob;
        }
    }
    for row in marg.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    (total.ln(), marg)
}
