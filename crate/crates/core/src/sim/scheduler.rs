use super::Scheduler;

/// Order in which the scheduler considers warps this cycle.
///
/// LRR starts just after the last warp that issued; GTO tries that warp
/// first and then falls back to the oldest (lowest id) warp.
pub fn priority_order(policy: Scheduler, last_issued: Option<usize>, warps: usize) -> Vec<usize> {
    match (policy, last_issued.filter(|l| *l < warps)) {
        (_, None) => (0..warps).collect(),
        (Scheduler::Lrr, Some(last)) => (1..=warps).map(|k| (last + k) % warps).collect(),
        (Scheduler::Gto, Some(last)) => std::iter::once(last).chain((0..warps).filter(|w| *w != last)).collect(),
    }
}

/// First ready warp in priority order, or `None` for an idle cycle.
pub fn scheduler_pick(policy: Scheduler, last_issued: Option<usize>, ready: &[bool]) -> Option<usize> {
    priority_order(policy, last_issued, ready.len()).into_iter().find(|w| ready[*w])
}
