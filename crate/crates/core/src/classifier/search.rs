//! Configuration search over the joint binary weight space of both
//! chains: exhaustive enumeration with an additive per-device fast path,
//! and greedy bit-flip hill climbing for larger chains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::ChainConfig;
use crate::classifier::{accuracy, EncodingParams, Network};
use crate::dataset::LabeledSpectrumDataset;
use crate::device::{rectification, Polarity};
use crate::encoding::{dbm_to_mw, encode_features};
use crate::error::{Error, Result};

/// Default per-chain device limit for exhaustive enumeration.
pub const SEARCH_ENUM_CAP: usize = 12;

const ACCURACY_HIST_BINS: usize = 100;
const DELTA_HIST_BINS: usize = 41;

/// Fixed-width histogram with explicit bin edges; out-of-range values
/// are clamped into the end bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins >= 1 && hi > lo, "histogram needs hi > lo and >= 1 bin");
        let edges = (0..=bins)
            .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
            .collect();
        Histogram {
            bin_edges: edges,
            counts: vec![0; bins],
        }
    }

    pub fn record(&mut self, value: f64) {
        let bins = self.counts.len();
        let lo = self.bin_edges[0];
        let hi = self.bin_edges[bins];
        let raw = ((value - lo) / (hi - lo) * bins as f64).floor();
        let idx = if raw.is_nan() || raw < 0.0 {
            0
        } else if raw >= bins as f64 {
            bins - 1
        } else {
            raw as usize
        };
        self.counts[idx] += 1;
    }

    pub fn from_values(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut h = Histogram::uniform(lo, hi, bins);
        for &v in values {
            h.record(v);
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Outcome of a configuration search. `best_accuracy` comes from a
/// direct re-evaluation of the winning pair, not from the internal
/// scoring tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_cfg0: ChainConfig,
    pub best_cfg1: ChainConfig,
    pub best_accuracy: f64,
    pub pairs_evaluated: u64,
    pub accuracy_hist: Histogram,
    pub delta_hist_class0: Histogram,
    pub delta_hist_class1: Histogram,
}

/// Per-example tone powers plus each device's summed Up/Down response
/// contributions for one chain. `up`/`down` are example-major, device-minor.
struct ChainTerms {
    n: usize,
    up: Vec<f64>,
    down: Vec<f64>,
    ref_vals: Vec<f64>,
}

fn example_tones(
    dataset: &LabeledSpectrumDataset,
    enc: &EncodingParams,
) -> Result<Vec<Vec<(f64, f64)>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(dataset.len());
    for ex in &dataset.examples {
        let tones = encode_features(
            &ex.features,
            enc.scale_dbm,
            &enc.s21,
            enc.f_min,
            enc.f_max,
            &mut rng,
        )?;
        out.push(
            tones
                .iter()
                .map(|t| (t.freq_mhz, dbm_to_mw(t.dbm)))
                .collect(),
        );
    }
    Ok(out)
}

fn chain_terms(
    chain: &crate::chain::Chain,
    reference: &ChainConfig,
    tones: &[Vec<(f64, f64)>],
) -> ChainTerms {
    let n = chain.len();
    let e_count = tones.len();
    let mut up = vec![0.0f64; e_count * n];
    let mut down = vec![0.0f64; e_count * n];
    for (e, tl) in tones.iter().enumerate() {
        for (j, dev) in chain.devices.iter().enumerate() {
            let mut su = 0.0;
            let mut sd = 0.0;
            for &(f, mw) in tl {
                su += rectification(dev, Polarity::Up, f) * mw;
                sd += rectification(dev, Polarity::Down, f) * mw;
            }
            up[e * n + j] = su;
            down[e * n + j] = sd;
        }
    }
    let ref_mask = reference.to_index();
    let ref_vals = (0..e_count)
        .map(|e| config_response(ref_mask, &up[e * n..(e + 1) * n], &down[e * n..(e + 1) * n]))
        .collect();
    ChainTerms {
        n,
        up,
        down,
        ref_vals,
    }
}

/// Response of one configuration, summing device contributions in
/// device order so every caller sees the same floating-point result.
fn config_response(mask: u64, up_row: &[f64], down_row: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..up_row.len() {
        acc += if mask >> j & 1 == 1 {
            up_row[j]
        } else {
            down_row[j]
        };
    }
    acc
}

fn delta_for(terms: &ChainTerms, mask: u64, e: usize) -> f64 {
    let n = terms.n;
    config_response(mask, &terms.up[e * n..(e + 1) * n], &terms.down[e * n..(e + 1) * n])
        - terms.ref_vals[e]
}

/// Reference-subtracted responses for every configuration of one chain:
/// `table[cfg * e_count + e]`.
fn delta_table(terms: &ChainTerms, e_count: usize) -> Vec<f64> {
    let size = 1usize << terms.n;
    let mut table = vec![0.0f64; size * e_count];
    table
        .par_chunks_mut(e_count)
        .enumerate()
        .for_each(|(cfg, row)| {
            for (e, slot) in row.iter_mut().enumerate() {
                *slot = delta_for(terms, cfg as u64, e);
            }
        });
    table
}

/// Same content transposed: `table[e * size + cfg]`.
fn delta_table_transposed(terms: &ChainTerms, e_count: usize) -> Vec<f64> {
    let size = 1usize << terms.n;
    let mut table = vec![0.0f64; e_count * size];
    table.par_chunks_mut(size).enumerate().for_each(|(e, row)| {
        for (cfg, slot) in row.iter_mut().enumerate() {
            *slot = delta_for(terms, cfg as u64, e);
        }
    });
    table
}

struct PairCounts {
    n0: usize,
    n1: usize,
    counts: Vec<u32>,
    delta0: Vec<f64>,
    delta1t: Vec<f64>,
}

/// Number of correctly classified examples for every (cfg0, cfg1) pair,
/// laid out cfg0-major. Each cfg0 row is filled independently, so the
/// result does not depend on the parallelism degree.
fn pair_count_table(
    net: &Network,
    dataset: &LabeledSpectrumDataset,
    enc: &EncodingParams,
) -> Result<PairCounts> {
    let tones = example_tones(dataset, enc)?;
    let e_count = tones.len();
    let t0 = chain_terms(&net.chain0, &net.ref0, &tones);
    let t1 = chain_terms(&net.chain1, &net.ref1, &tones);
    let delta0 = delta_table(&t0, e_count);
    let delta1t = delta_table_transposed(&t1, e_count);
    let size0 = 1usize << t0.n;
    let size1 = 1usize << t1.n;
    let want0: Vec<bool> = dataset.examples.iter().map(|ex| ex.label == 0).collect();

    let mut counts = vec![0u32; size0 * size1];
    counts
        .par_chunks_mut(size1)
        .enumerate()
        .for_each(|(c0, row)| {
            for e in 0..e_count {
                let dv0 = delta0[c0 * e_count + e];
                let w0 = want0[e];
                let dv1_row = &delta1t[e * size1..(e + 1) * size1];
                for (c1, slot) in row.iter_mut().enumerate() {
                    let pred0 = dv0 >= dv1_row[c1];
                    *slot += (pred0 == w0) as u32;
                }
            }
        });
    Ok(PairCounts {
        n0: t0.n,
        n1: t1.n,
        counts,
        delta0,
        delta1t,
    })
}

fn margin_hists(
    dataset: &LabeledSpectrumDataset,
    margins: &[f64],
) -> (Histogram, Histogram) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &m in margins {
        lo = lo.min(m);
        hi = hi.max(m);
    }
    if !(hi > lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    let mut h0 = Histogram::uniform(lo, hi, DELTA_HIST_BINS);
    let mut h1 = Histogram::uniform(lo, hi, DELTA_HIST_BINS);
    for (ex, &m) in dataset.examples.iter().zip(margins) {
        if ex.label == 0 {
            h0.record(m);
        } else {
            h1.record(m);
        }
    }
    (h0, h1)
}

fn reevaluate(
    net: &Network,
    cfg0: &ChainConfig,
    cfg1: &ChainConfig,
    dataset: &LabeledSpectrumDataset,
    enc: &EncodingParams,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mean, _) = accuracy(net, cfg0, cfg1, dataset, enc, 1, &mut rng)?;
    Ok(mean)
}

/// Scores every configuration pair of the two chains and returns the
/// best one (ties go to the lowest pair index). Scoring is noiseless;
/// apply `accuracy` with repeats for noise statistics.
pub fn exhaustive_search(
    net: &Network,
    dataset: &LabeledSpectrumDataset,
    enc: &EncodingParams,
    cap: usize,
) -> Result<SearchResult> {
    dataset.validate()?;
    for n in [net.chain0.len(), net.chain1.len()] {
        if n > cap {
            return Err(Error::EnumerationCap { n, cap });
        }
    }
    let pc = pair_count_table(net, dataset, enc)?;
    let e_count = dataset.len();
    let size1 = 1usize << pc.n1;

    let mut best_idx = 0usize;
    let mut best_count = 0u32;
    let mut acc_hist = Histogram::uniform(0.0, 1.0, ACCURACY_HIST_BINS);
    for (idx, &c) in pc.counts.iter().enumerate() {
        if c > best_count {
            best_count = c;
            best_idx = idx;
        }
        acc_hist.record(c as f64 / e_count as f64);
    }
    let best_c0 = (best_idx / size1) as u64;
    let best_c1 = (best_idx % size1) as u64;

    let margins: Vec<f64> = (0..e_count)
        .map(|e| pc.delta0[best_c0 as usize * e_count + e] - pc.delta1t[e * size1 + best_c1 as usize])
        .collect();
    let (h0, h1) = margin_hists(dataset, &margins);

    let best_cfg0 = ChainConfig::from_index(best_c0, pc.n0);
    let best_cfg1 = ChainConfig::from_index(best_c1, pc.n1);
    let best_accuracy = reevaluate(net, &best_cfg0, &best_cfg1, dataset, enc)?;
    Ok(SearchResult {
        best_cfg0,
        best_cfg1,
        best_accuracy,
        pairs_evaluated: pc.counts.len() as u64,
        accuracy_hist: acc_hist,
        delta_hist_class0: h0,
        delta_hist_class1: h1,
    })
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded bijection on `[0, 2^bits)` via a four-round Feistel network
/// with cycle walking. Restart r starts from `permuted_index(seed, r)`,
/// so 2^bits restarts provably visit every joint configuration once.
fn permuted_index(seed: u64, r: u64, bits: u32) -> u64 {
    debug_assert!((1..=63).contains(&bits));
    let half = bits.div_ceil(2);
    let half_mask = (1u64 << half) - 1;
    let keys = [
        splitmix(seed),
        splitmix(seed ^ 0x5bf0_3635),
        splitmix(seed.rotate_left(17)),
        splitmix(!seed),
    ];
    let domain = 1u64 << bits;
    let mut x = r % domain;
    loop {
        let mut l = x & half_mask;
        let mut h = (x >> half) & half_mask;
        for k in keys {
            let nh = l;
            let nl = h ^ (splitmix(l ^ k) & half_mask);
            h = nh;
            l = nl;
        }
        x = (h << half) | l;
        if x < domain {
            return x;
        }
    }
}

fn count_margins(margins: &[f64], want0: &[bool]) -> u32 {
    margins
        .iter()
        .zip(want0)
        .map(|(&m, &w)| ((m >= 0.0) == w) as u32)
        .sum()
}

/// Greedy hill climbing over single bit flips of either chain, restarted
/// from a seeded permutation of the joint configuration space. Intended
/// for chains beyond the exhaustive cap; scoring is noiseless.
pub fn local_search(
    net: &Network,
    dataset: &LabeledSpectrumDataset,
    enc: &EncodingParams,
    seed: u64,
    restarts: usize,
) -> Result<SearchResult> {
    dataset.validate()?;
    if restarts == 0 {
        return Err(Error::Domain("restarts must be >= 1".into()));
    }
    let n0 = net.chain0.len();
    let n1 = net.chain1.len();
    if n0 > 63 || n1 > 63 {
        return Err(Error::Domain(format!(
            "local search supports at most 63 devices per chain, got {n0} and {n1}"
        )));
    }
    let tones = example_tones(dataset, enc)?;
    let e_count = tones.len();
    let t0 = chain_terms(&net.chain0, &net.ref0, &tones);
    let t1 = chain_terms(&net.chain1, &net.ref1, &tones);
    let want0: Vec<bool> = dataset.examples.iter().map(|ex| ex.label == 0).collect();
    // Flip gradients: adding grad0[e*n0+j] to an example's margin is the
    // effect of turning chain-0 device j from Down to Up.
    let grad0: Vec<f64> = (0..e_count * n0).map(|i| t0.up[i] - t0.down[i]).collect();
    let grad1: Vec<f64> = (0..e_count * n1).map(|i| t1.up[i] - t1.down[i]).collect();

    let margins_of = |m0: u64, m1: u64| -> Vec<f64> {
        (0..e_count)
            .map(|e| delta_for(&t0, m0, e) - delta_for(&t1, m1, e))
            .collect()
    };

    let bits = (n0 + n1) as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evals = 0u64;
    let mut best: Option<(u32, u64, u64)> = None;
    let mut acc_hist = Histogram::uniform(0.0, 1.0, ACCURACY_HIST_BINS);

    for r in 0..restarts {
        let (mut m0, mut m1) = if bits <= 63 {
            let p = permuted_index(seed, r as u64, bits);
            (p & ((1u64 << n0) - 1), p >> n0)
        } else {
            (
                rng.gen::<u64>() & ((1u64 << n0) - 1),
                rng.gen::<u64>() & ((1u64 << n1) - 1),
            )
        };
        let mut margins = margins_of(m0, m1);
        let mut cur = count_margins(&margins, &want0);
        evals += 1;

        loop {
            let mut flip: Option<(bool, usize, u32)> = None;
            let mut flip_count = cur;
            for j in 0..n0 {
                let sign = if m0 >> j & 1 == 1 { -1.0 } else { 1.0 };
                let c: u32 = (0..e_count)
                    .map(|e| {
                        let m = margins[e] + sign * grad0[e * n0 + j];
                        ((m >= 0.0) == want0[e]) as u32
                    })
                    .sum();
                evals += 1;
                if c > flip_count {
                    flip_count = c;
                    flip = Some((false, j, c));
                }
            }
            for j in 0..n1 {
                let sign = if m1 >> j & 1 == 1 { 1.0 } else { -1.0 };
                let c: u32 = (0..e_count)
                    .map(|e| {
                        let m = margins[e] + sign * grad1[e * n1 + j];
                        ((m >= 0.0) == want0[e]) as u32
                    })
                    .sum();
                evals += 1;
                if c > flip_count {
                    flip_count = c;
                    flip = Some((true, j, c));
                }
            }
            let Some((on_chain1, j, _)) = flip else { break };
            let (cand0, cand1) = if on_chain1 {
                (m0, m1 ^ (1u64 << j))
            } else {
                (m0 ^ (1u64 << j), m1)
            };
            // Confirm the probe with freshly computed margins so that
            // accepted counts are always exact and strictly increasing.
            let cand_margins = margins_of(cand0, cand1);
            let cand_cur = count_margins(&cand_margins, &want0);
            if cand_cur <= cur {
                break;
            }
            m0 = cand0;
            m1 = cand1;
            margins = cand_margins;
            cur = cand_cur;
        }

        acc_hist.record(cur as f64 / e_count as f64);
        let better = match best {
            None => true,
            Some((bc, _, _)) => cur > bc,
        };
        if better {
            best = Some((cur, m0, m1));
        }
    }

    let (_, b0, b1) = best.expect("restarts >= 1");
    let margins = margins_of(b0, b1);
    let (h0, h1) = margin_hists(dataset, &margins);
    let best_cfg0 = ChainConfig::from_index(b0, n0);
    let best_cfg1 = ChainConfig::from_index(b1, n1);
    let best_accuracy = reevaluate(net, &best_cfg0, &best_cfg1, dataset, enc)?;
    Ok(SearchResult {
        best_cfg0,
        best_cfg1,
        best_accuracy,
        pairs_evaluated: evals,
        accuracy_hist: acc_hist,
        delta_hist_class0: h0,
        delta_hist_class1: h1,
    })
}
