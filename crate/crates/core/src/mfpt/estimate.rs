use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Estimates, Inner, MfptError, MfptTable};
use crate::graph::Graph;


/// Walk length sufficient for passage times to and from hubs of a scale-free
/// graph: `(0.197 n − 2.248) · 10⁴`, never below `10 n`.
pub fn walk_length_default(n: usize) -> u64 {
    let fitted = ((0.197 * n as f64 - 2.248) * 1e4).round();
    let floor = 10 * n as u64;
    if fitted > floor as f64 {
        fitted as u64
    } else {
        floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkParams {
    pub walk_len: u64,
    pub seed: u64,
    pub start: usize,
}

impl WalkParams {
    pub fn new(walk_len: u64, seed: u64) -> Self {
        Self { walk_len, seed, start: 0 }
    }

    pub fn starting_at(mut self, start: usize) -> Self {
        self.start = start;
        self
    }
}

/// The transition rows packed for walking, over internal ids in which
/// heavily entered nodes come first so that the states a walk visits most
/// share cache lines and pages.
///
/// Row `v` is one header word holding the node's target and source slots,
/// followed by one word per out-neighbor: a 32-bit cumulative threshold above
/// a 32-bit internal column. A self-loop, if present, comes first so staying
/// put is one comparison. Quantizing thresholds to 2⁻³² keeps a step to a
/// single contiguous read.
struct Sampler {
    offsets: Vec<usize>,
    rows: Vec<u64>,
    /// `internal[v]` is the internal id of node `v`.
    internal: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

impl Sampler {
    fn new(g: &Graph, target_slot: &[Option<usize>], source_slot: &[Option<usize>]) -> Self {
        let n = g.node_count();
        let mut inflow = vec![0.0; n];
        for (_, j, w) in g.edges() {
            inflow[j] += w;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| inflow[b].total_cmp(&inflow[a]).then(a.cmp(&b)));
        let mut internal = vec![0u32; n];
        for (k, &v) in order.iter().enumerate() {
            internal[v] = k as u32;
        }

        let slot = |s: Option<usize>| s.map_or(NO_SLOT, |k| k as u32);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut rows = Vec::with_capacity(n + g.edge_count());
        for &i in &order {
            offsets.push(rows.len());
            rows.push(u64::from(slot(target_slot[i])) | u64::from(slot(source_slot[i])) << 32);
            let row = g.row(i);
            let total: f64 = row.iter().map(|&(_, w)| w).sum();
            let mut acc = 0.0;
            let own = row.iter().filter(|&&(j, _)| j == i);
            for &(j, w) in own.chain(row.iter().filter(|&&(j, _)| j != i)) {
                acc += w;
                let threshold = (acc / total * 4_294_967_296.0).min(4_294_967_295.0) as u64;
                rows.push(threshold << 32 | u64::from(internal[j]));
            }
        }
        offsets.push(rows.len());
        Self { offsets, rows, internal }
    }

    /// Header and transitions of internal node `v`.
    fn row(&self, v: usize) -> (Option<usize>, Option<usize>, &[u64]) {
        let row = &self.rows[self.offsets[v]..self.offsets[v + 1]];
        let slot = |k: u64| (k as u32 != NO_SLOT).then_some(k as u32 as usize);
        (slot(row[0]), slot(row[0] >> 32), &row[1..])
    }

    fn step(transitions: &[u64], rng: &mut ChaCha8Rng) -> usize {
        let u = u64::from(rng.random::<u32>());
        let pick = |k: usize| (transitions[k] & 0xffff_ffff) as usize;
        if u < transitions[0] >> 32 {
            return pick(0);
        }
        let k = transitions.partition_point(|&e| e >> 32 <= u).min(transitions.len() - 1);
        pick(k)
    }
}

/// Estimates passage times from one seeded random walk of `walk_len` steps.
///
/// For every node `i` and target `t`, each stretch between consecutive
/// arrivals at `t` contributes one sample: the time from the first visit of
/// `i` in that stretch to the arrival. Symmetrically, for every source `s`
/// and node `j`, the time from the first visit of `s` after `j`'s previous
/// visit to the next arrival at `j` is a sample of `m_sj`. Samples before
/// the first arrival are kept. Cost is `O(walk_len · (|targets| + |sources|))`.
pub fn mfpt_estimate(
    g: &Graph,
    targets: &[usize],
    sources: &[usize],
    params: WalkParams,
) -> Result<MfptTable, MfptError> {
    let n = g.node_count();
    if targets.is_empty() {
        return Err(MfptError::NoTargets);
    }
    if params.walk_len == 0 {
        return Err(MfptError::EmptyWalk);
    }
    for &node in targets.iter().chain(sources).chain([&params.start]) {
        if node >= n {
            return Err(MfptError::NodeOutOfRange { node, n });
        }
    }
    let targets = dedup(targets);
    let sources = dedup(sources);
    let (nt, ns) = (targets.len(), sources.len());
    let target_slot = slots(n, &targets);
    let source_slot = slots(n, &sources);

    let sampler = Sampler::new(g, &target_slot, &source_slot);
    let internal = |v: usize| sampler.internal[v] as usize;
    let shared: Vec<Option<usize>> = targets.iter().map(|&t| source_slot[t]).collect();
    let layout = Layout { n, nt, ns, shared: &shared };
    let params_internal = WalkParams { start: internal(params.start), ..params };
    // Every per-entry sum and count is bounded by the walk length, so short
    // enough walks keep all bookkeeping in 32 bits.
    let tally = if params.walk_len < u64::from(u32::MAX) {
        walk::<u32>(&sampler, &layout, params_internal)
    } else {
        walk::<u64>(&sampler, &layout, params_internal)
    };
    let reorder = |values: &[u64], width: usize| -> Vec<u64> {
        (0..n * width).map(|k| values[internal(k / width) * width + k % width]).collect()
    };
    let to_sum = reorder(&tally.to_sum, nt);
    let to_count = reorder(&tally.to_count, nt);
    let from_sum = reorder(&tally.from_sum, ns);
    let from_count = reorder(&tally.from_count, ns);

    let to_mean = means(&to_sum, &to_count);
    let to_fill = (0..nt)
        .map(|t| fill_value(n, params.walk_len, (0..n).map(|i| (to_mean[i * nt + t], to_count[i * nt + t]))))
        .collect();

    // Re-layout source estimates as source-major rows.
    let mut from_mean_rows = vec![0.0; ns * n];
    let mut from_count_rows = vec![0u64; ns * n];
    for j in 0..n {
        for s in 0..ns {
            let k = j * ns + s;
            if from_count[k] > 0 {
                from_mean_rows[s * n + j] = from_sum[k] as f64 / from_count[k] as f64;
            }
            from_count_rows[s * n + j] = from_count[k];
        }
    }
    let from_fill = (0..ns)
        .map(|s| {
            fill_value(
                n,
                params.walk_len,
                (0..n).map(|j| (from_mean_rows[s * n + j], from_count_rows[s * n + j])),
            )
        })
        .collect();

    let estimates = Estimates {
        walk_len: params.walk_len,
        targets,
        target_slot,
        to_mean,
        to_count,
        to_fill,
        sources,
        source_slot,
        from_mean: from_mean_rows,
        from_count: from_count_rows,
        from_fill,
    };
    let table = MfptTable { n, inner: Inner::Estimated(estimates) };
    let unsampled = table.unsampled_targets();
    if !unsampled.is_empty() {
        log::warn!("walk of {} steps never sampled targets {unsampled:?}", params.walk_len);
    }
    let missing = table.missing_entries();
    if missing > 0 {
        log::warn!("{missing} passage-time entries have no samples and will be substituted");
    }
    Ok(table)
}

/// Unsigned time stamps and tallies.
trait Stamp: Copy + Ord + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> {
    const MAX: Self;
    const ZERO: Self;
    const ONE: Self;
    fn from_time(t: u64) -> Self;
    fn widen(self) -> u64;
}

macro_rules! stamp {
    ($t:ty) => {
        impl Stamp for $t {
            const MAX: Self = <$t>::MAX;
            const ZERO: Self = 0;
            const ONE: Self = 1;
            fn from_time(t: u64) -> Self {
                t as $t
            }
            fn widen(self) -> u64 {
                self as u64
            }
        }
    };
}
stamp!(u32);
stamp!(u64);

struct Layout<'a> {
    n: usize,
    nt: usize,
    ns: usize,
    /// Source slot of each target that is also a source.
    shared: &'a [Option<usize>],
}

/// Node-major sums and counts: `to_*[i * nt + t]`, `from_*[j * ns + s]`.
struct Tally {
    to_sum: Vec<u64>,
    to_count: Vec<u64>,
    from_sum: Vec<u64>,
    from_count: Vec<u64>,
}

/// Visits the walk has reached but not yet booked. Bookkeeping trails the
/// walk by this many visits so that each visit's row is prefetched well
/// before it is needed.
const LOOKAHEAD: usize = 8;

fn walk<T: Stamp>(sampler: &Sampler, layout: &Layout, params: WalkParams) -> Tally {
    let mut books = Books::<T>::new(layout);
    let mut queue = std::collections::VecDeque::with_capacity(LOOKAHEAD + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut v = params.start;
    let mut prev = usize::MAX;
    for time in 0..params.walk_len {
        let (target, source, transitions) = sampler.row(v);
        // Staying at an ordinary node changes no bookkeeping: nothing else
        // was visited since the same node was processed one step ago.
        if v != prev || target.is_some() || source.is_some() {
            prev = v;
            books.prefetch(v);
            queue.push_back(Visit { node: v, time: T::from_time(time), target, source });
        }
        v = Sampler::step(transitions, &mut rng);
        if queue.len() > LOOKAHEAD {
            prefetch(&sampler.rows[sampler.offsets[v]]);
            books.book(queue.pop_front().unwrap());
        }
    }
    for visit in queue {
        books.book(visit);
    }
    books.finish(sampler)
}

struct Visit<T> {
    node: usize,
    time: T,
    target: Option<usize>,
    source: Option<usize>,
}

/// Samples are settled lazily when a node is next visited, from one log of
/// visit times per target or source, so a visit touches no memory but its
/// own row and the ends of the logs.
///
/// Each row holds one cell per log. `idx` is the length of the log just
/// after the node's last visit, so `log[idx]` is the first visit of the
/// log's node since then: the arrival that ends the node's current stretch
/// of a target, and the start of its next passage from a source. A node
/// leaving a source it sits on starts that passage itself, at `idx - 1`.
/// Cells are `[first, idx, to_sum, count]` for targets and `[idx, from_sum,
/// count]` for sources, where `first` is the first visit in the current
/// stretch. A node that is both uses the target cell for both directions:
/// they close samples on the same visits, bar the stretches settled when
/// the walk ends, and their passages tile the time from the first visit of
/// the row's node to `first`, which recovers `from_sum`. On the node's own
/// cell both passages are its return time.
struct Books<'a, T> {
    layout: &'a Layout<'a>,
    /// Cells of each kind, in log order.
    both: usize,
    to_only: usize,
    width: usize,
    state: Vec<T>,
    /// First visit of every node, `MAX` before it.
    first_visit: Vec<T>,
    logs: Vec<Vec<T>>,
    target_log: Vec<usize>,
    source_log: Vec<usize>,
}

impl<'a, T: Stamp> Books<'a, T> {
    fn new(layout: &'a Layout<'a>) -> Self {
        let Layout { n, nt, ns, shared } = *layout;
        let both = shared.iter().flatten().count();
        let (to_only, from_only) = (nt - both, ns - both);
        let mut target_log = vec![0; nt];
        let mut source_log = vec![usize::MAX; ns];
        let (mut next_both, mut next_to) = (0, both);
        for (t, pair) in shared.iter().enumerate() {
            if let Some(s) = *pair {
                target_log[t] = next_both;
                source_log[s] = next_both;
                next_both += 1;
            } else {
                target_log[t] = next_to;
                next_to += 1;
            }
        }
        let mut next_from = both + to_only;
        for log in source_log.iter_mut().filter(|log| **log == usize::MAX) {
            *log = next_from;
            next_from += 1;
        }
        let width = 4 * (both + to_only) + 3 * from_only;
        Self {
            layout,
            both,
            to_only,
            width,
            state: vec![T::ZERO; n * width],
            first_visit: vec![T::MAX; n],
            logs: vec![Vec::new(); both + to_only + from_only],
            target_log,
            source_log,
        }
    }

    fn prefetch(&self, v: usize) {
        let line = 64 / std::mem::size_of::<T>();
        for cell in self.state[v * self.width..(v + 1) * self.width].iter().step_by(line) {
            prefetch(cell);
        }
    }

    fn book(&mut self, visit: Visit<T>) {
        let Visit { node: v, time: now, target, source } = visit;
        let own = target.map(|t| self.target_log[t]).or(source.map(|s| self.source_log[s]));
        if let Some(log) = own {
            self.logs[log].push(now);
        }
        let (both, to_only) = (self.both, self.to_only);
        let row = &mut self.state[v * self.width..(v + 1) * self.width];
        let (both_row, rest) = row.split_at_mut(4 * both);
        let (to_row, from_row) = rest.split_at_mut(4 * to_only);
        let (both_logs, rest) = self.logs.split_at(both);
        let (to_logs, from_logs) = rest.split_at(to_only);
        let index = |log: &Vec<T>| T::from_time(log.len() as u64);

        if self.first_visit[v] == T::MAX {
            self.first_visit[v] = now;
            for (cell, log) in both_row.chunks_exact_mut(4).zip(both_logs).chain(to_row.chunks_exact_mut(4).zip(to_logs)) {
                cell[0] = now;
                cell[1] = index(log);
            }
            for (cell, log) in from_row.chunks_exact_mut(3).zip(from_logs) {
                cell[0] = index(log);
            }
            return;
        }
        for (cell, log) in both_row.chunks_exact_mut(4).zip(both_logs).chain(to_row.chunks_exact_mut(4).zip(to_logs)) {
            if close_stretch(cell, log) {
                cell[0] = now;
                cell[1] = index(log);
            }
        }
        let offset = both + to_only;
        for (k, (cell, log)) in from_row.chunks_exact_mut(3).zip(from_logs).enumerate() {
            let leaving = usize::from(own == Some(offset + k));
            if let Some(&begin) = log.get(cell[0].widen() as usize - leaving) {
                cell[1] = cell[1] + (now - begin);
                cell[2] = cell[2] + T::ONE;
                cell[0] = index(log);
            }
        }
    }

    fn finish(mut self, sampler: &Sampler) -> Tally {
        let Layout { n, nt, ns, .. } = *self.layout;
        let (both, to_only, width) = (self.both, self.to_only, self.width);
        let mut tally = Tally {
            to_sum: vec![0; n * nt],
            to_count: vec![0; n * nt],
            from_sum: vec![0; n * ns],
            from_count: vec![0; n * ns],
        };
        let cell_of = |log: usize| {
            if log < both + to_only {
                4 * log
            } else {
                4 * (both + to_only) + 3 * (log - both - to_only)
            }
        };
        let own_log = |v: usize| sampler.row(v).0.map(|t| self.target_log[t]);
        for (v, row) in self.state.chunks_exact_mut(width).enumerate() {
            let seen = self.first_visit[v] != T::MAX;
            for (s, &log) in self.source_log.iter().enumerate() {
                let cell = &row[cell_of(log)..];
                let (sum, count) = if log >= both {
                    (cell[1].widen(), cell[2].widen())
                } else if !seen {
                    (0, 0)
                } else if own_log(v) == Some(log) {
                    (cell[2].widen(), cell[3].widen())
                } else {
                    ((cell[0] - self.first_visit[v] - cell[2]).widen(), cell[3].widen())
                };
                tally.from_sum[v * ns + s] = sum;
                tally.from_count[v * ns + s] = count;
            }
            for (t, &log) in self.target_log.iter().enumerate() {
                let cell = &mut row[cell_of(log)..];
                // Stretches that ended after the node's last visit still
                // hold a sample.
                if seen {
                    close_stretch(cell, &self.logs[log]);
                }
                tally.to_sum[v * nt + t] = cell[2].widen();
                tally.to_count[v * nt + t] = cell[3].widen();
            }
        }
        tally
    }
}

/// Records the sample of a `[first, idx, sum, count]` cell if its stretch
/// has ended.
fn close_stretch<T: Stamp>(cell: &mut [T], log: &[T]) -> bool {
    match log.get(cell[1].widen() as usize) {
        Some(&end) => {
            cell[2] = cell[2] + (end - cell[0]);
            cell[3] = cell[3] + T::ONE;
            true
        }
        None => false,
    }
}

#[inline(always)]
fn prefetch<T>(value: &T) {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: prefetching is a hint and never faults, even on bad addresses.
    unsafe {
        use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        _mm_prefetch::<_MM_HINT_T0>((value as *const T).cast());
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = value;
}

fn dedup(nodes: &[usize]) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    nodes.iter().copied().filter(|v| seen.insert(*v)).collect()
}

fn slots(n: usize, nodes: &[usize]) -> Vec<Option<usize>> {
    let mut slot = vec![None; n];
    for (k, &v) in nodes.iter().enumerate() {
        slot[v] = Some(k);
    }
    slot
}

fn means(sum: &[u64], count: &[u64]) -> Vec<f64> {
    sum.iter()
        .zip(count)
        .map(|(&s, &c)| if c > 0 { s as f64 / c as f64 } else { 0.0 })
        .collect()
}

/// `n` times the mean observed passage time; the walk length when nothing
/// was observed at all.
fn fill_value(n: usize, walk_len: u64, entries: impl Iterator<Item = (f64, u64)>) -> f64 {
    let (total, seen) = entries
        .filter(|&(_, c)| c > 0)
        .fold((0.0, 0usize), |(sum, k), (m, _)| (sum + m, k + 1));
    if seen == 0 {
        walk_len as f64
    } else {
        n as f64 * total / seen as f64
    }
}
