use rand::Rng;

/// Index of the maximum, ties broken uniformly at random. Consumes
/// randomness only when there is a tie.
pub fn argmax_random<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    debug_assert!(!values.is_empty());
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|v| **v == best).count();
    if ties <= 1 {
        return values.iter().position(|v| *v == best).unwrap_or(0);
    }
    let pick = rng.random_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == best)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("pick < ties")
}

/// Index of the maximum, smallest index on ties.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Uniform action with probability `epsilon`, otherwise greedy. Always
/// draws the exploration coin so streams stay aligned across agents.
pub fn epsilon_greedy<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..values.len())
    } else {
        argmax_random(values, rng)
    }
}
