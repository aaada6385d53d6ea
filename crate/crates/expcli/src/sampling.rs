//! Random pyramid-compatible architectures for the architecture sweep.

use hm_core::{Architecture, Error, Result, RngStream};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchConstraints {
    pub min_depth: usize,
    pub max_depth: usize,
    pub visible_side: usize,
    /// Candidate hidden-layer sides, strictly decreasing.
    pub allowed_sides: Vec<usize>,
}

pub fn check_constraints(c: &ArchConstraints) -> Result<()> {
    if c.min_depth == 0 || c.min_depth > c.max_depth {
        return Err(Error::Precondition(format!(
            "depth range [{}, {}] is empty or starts at zero",
            c.min_depth, c.max_depth
        )));
    }
    if c.allowed_sides.is_empty() || c.allowed_sides.contains(&0) {
        return Err(Error::Precondition("allowed_sides must be positive and nonempty".into()));
    }
    if c.allowed_sides.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("allowed_sides must be strictly decreasing".into()));
    }
    if c.allowed_sides[0] >= c.visible_side {
        return Err(Error::Precondition(format!(
            "allowed side {} is not below the visible side {}",
            c.allowed_sides[0], c.visible_side
        )));
    }
    if c.max_depth > c.allowed_sides.len() {
        return Err(Error::Precondition(format!(
            "max_depth {} exceeds the {} allowed sides",
            c.max_depth,
            c.allowed_sides.len()
        )));
    }
    Ok(())
}

/// Depth uniform in `[min_depth, max_depth]`, then a uniformly random
/// subset of `allowed_sides` of that size, kept in decreasing order.
pub fn sample_random_architecture(rng: &mut RngStream, c: &ArchConstraints) -> Result<Architecture> {
    check_constraints(c)?;
    let depth = c.min_depth + rng.below(c.max_depth - c.min_depth + 1);
    let mut picks: Vec<usize> = (0..c.allowed_sides.len()).collect();
    rng.shuffle(&mut picks);
    let mut chosen = picks[..depth].to_vec();
    chosen.sort_unstable();
    let sizes = std::iter::once(c.visible_side * c.visible_side)
        .chain(chosen.iter().map(|&i| c.allowed_sides[i].pow(2)))
        .collect::<Vec<_>>();
    Architecture::new(sizes)
}
