use std::cmp::Ordering;
use std::fmt;

use crate::error::{domain, Error, Gender, Result};
use crate::sim::pool::Applicant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    NoConstraint,
    EqualSelection,
    DemographicParity,
    ErrorRateParity,
    EqualizedOdds,
    EqualSelectionMinQsDiff,
    ComplementaryEqualSelection,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::NoConstraint,
        PolicyKind::EqualSelection,
        PolicyKind::DemographicParity,
        PolicyKind::ErrorRateParity,
        PolicyKind::EqualizedOdds,
        PolicyKind::EqualSelectionMinQsDiff,
        PolicyKind::ComplementaryEqualSelection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::NoConstraint => "no_constraint",
            PolicyKind::EqualSelection => "equal_selection",
            PolicyKind::DemographicParity => "demographic_parity",
            PolicyKind::ErrorRateParity => "error_rate_parity",
            PolicyKind::EqualizedOdds => "equalized_odds",
            PolicyKind::EqualSelectionMinQsDiff => "equal_selection_min_qs_diff",
            PolicyKind::ComplementaryEqualSelection => "complementary_equal_selection",
        }
    }

    pub fn parse(s: &str) -> Option<PolicyKind> {
        PolicyKind::ALL.into_iter().find(|k| k.name() == s)
    }

    fn is_parity(self) -> bool {
        matches!(self, PolicyKind::ErrorRateParity | PolicyKind::EqualizedOdds)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    /// Allowed across-gender rate gap for the parity kinds.
    pub tolerance: f64,
    /// Men considered by the min-gap kinds: this multiple of the male slots.
    pub candidate_pool_multiplier: f64,
}

impl Policy {
    pub fn new(kind: PolicyKind) -> Policy {
        Policy { kind, tolerance: 0.02, candidate_pool_multiplier: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_parity() && !(self.tolerance > 0.0) {
            return Err(domain(format!("{} needs a positive tolerance, got {}", self.kind, self.tolerance)));
        }
        if !(self.candidate_pool_multiplier >= 1.0) {
            return Err(domain(format!("candidate pool multiplier {} below 1", self.candidate_pool_multiplier)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shortlist {
    /// Pool indices, ascending.
    pub members: Vec<usize>,
    /// False when a parity search could not meet its tolerance and the
    /// closest feasible split was used instead.
    pub constraint_met: bool,
    /// Rate gap for the parity kinds, absolute mean gap for the min-gap kinds,
    /// zero otherwise.
    pub gap: f64,
}

/// Pool indices of one gender, best score first; ties keep pool order.
fn ranked(pool: &[Applicant], g: Gender, key: impl Fn(&Applicant) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].gender == g).collect();
    idx.sort_by(|&a, &b| key(&pool[b]).partial_cmp(&key(&pool[a])).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

fn qs(a: &Applicant) -> f64 {
    a.q_s
}

fn qh(a: &Applicant) -> f64 {
    a.q_h
}

struct Ranked {
    women: Vec<usize>,
    men: Vec<usize>,
}

impl Ranked {
    fn by_screen(pool: &[Applicant]) -> Ranked {
        Ranked { women: ranked(pool, Gender::Female, qs), men: ranked(pool, Gender::Male, qs) }
    }

    fn take(&self, k_f: usize, k_m: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.women[..k_f].iter().chain(&self.men[..k_m]).copied().collect();
        out.sort_unstable();
        out
    }

    /// Split of k into (women, men) that gives the odd slot to the gender
    /// with the higher next-best screening score.
    fn equal_split(&self, pool: &[Applicant], k: usize) -> Result<(usize, usize)> {
        let need = k.div_ceil(2);
        for (g, len) in [(Gender::Female, self.women.len()), (Gender::Male, self.men.len())] {
            if len < need {
                return Err(Error::Infeasible {
                    group: g,
                    required: if len == 0 { f64::INFINITY } else { need as f64 / len as f64 },
                });
            }
        }
        let half = k / 2;
        if k.is_multiple_of(2) {
            return Ok((half, half));
        }
        let next_f = pool[self.women[half]].q_s;
        let next_m = pool[self.men[half]].q_s;
        Ok(if next_f > next_m { (half + 1, half) } else { (half, half + 1) })
    }
}

pub fn shortlist(pool: &[Applicant], k: usize, policy: &Policy) -> Result<Shortlist> {
    policy.validate()?;
    if k == 0 || k > pool.len() {
        return Err(domain(format!("shortlist size {k} outside 1..={}", pool.len())));
    }
    let r = Ranked::by_screen(pool);
    let done = |members: Vec<usize>| Shortlist { members, constraint_met: true, gap: 0.0 };
    match policy.kind {
        PolicyKind::NoConstraint => {
            let mut all: Vec<usize> = (0..pool.len()).collect();
            all.sort_by(|&a, &b| pool[b].q_s.partial_cmp(&pool[a].q_s).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
            all.truncate(k);
            all.sort_unstable();
            Ok(done(all))
        }
        PolicyKind::EqualSelection => {
            let (kf, km) = r.equal_split(pool, k)?;
            Ok(done(r.take(kf, km)))
        }
        PolicyKind::DemographicParity => {
            let (kf, km) = parity_counts(pool, &r, k);
            Ok(done(r.take(kf, km)))
        }
        PolicyKind::ErrorRateParity | PolicyKind::EqualizedOdds => Ok(rate_parity(pool, &r, k, policy)),
        PolicyKind::EqualSelectionMinQsDiff => matched(pool, &r, k, policy, qs),
        PolicyKind::ComplementaryEqualSelection => matched(pool, &r, k, policy, qh),
    }
}

/// Largest-remainder apportionment of k slots by pool shares.
fn parity_counts(pool: &[Applicant], r: &Ranked, k: usize) -> (usize, usize) {
    let n = pool.len() as f64;
    let exact_f = k as f64 * r.women.len() as f64 / n;
    let exact_m = k as f64 - exact_f;
    let (mut kf, km) = (exact_f.floor() as usize, exact_m.floor() as usize);
    if kf + km < k {
        let (rf, rm) = (exact_f - kf as f64, exact_m - km as f64);
        let female_wins = if rf != rm {
            rf > rm
        } else {
            match (r.women.get(kf), r.men.get(km)) {
                (Some(&f), Some(&m)) => pool[f].q_s > pool[m].q_s,
                (Some(_), None) => true,
                _ => false,
            }
        };
        if female_wins {
            kf += 1;
        }
    }
    // men take whatever is left; keep the split inside the pool
    let kf = kf.min(r.women.len());
    (kf, k - kf)
}

struct GroupLabels {
    /// prefix[i] = positive labels among the top i.
    prefix: Vec<usize>,
    score: Vec<f64>,
}

impl GroupLabels {
    fn new(pool: &[Applicant], idx: &[usize]) -> GroupLabels {
        let mut prefix = vec![0; idx.len() + 1];
        let mut score = vec![0.0; idx.len() + 1];
        for (i, &j) in idx.iter().enumerate() {
            prefix[i + 1] = prefix[i] + pool[j].label as usize;
            score[i + 1] = score[i] + pool[j].q_s;
        }
        GroupLabels { prefix, score }
    }

    fn size(&self) -> usize {
        self.prefix.len() - 1
    }

    fn error_rate(&self, k: usize) -> f64 {
        let n = self.size();
        if n == 0 {
            return 0.0;
        }
        let pos = self.prefix[n];
        let hit = self.prefix[k];
        (pos + k - 2 * hit) as f64 / n as f64
    }

    fn tpr_fpr(&self, k: usize) -> (Option<f64>, Option<f64>) {
        let n = self.size();
        let pos = self.prefix[n];
        let neg = n - pos;
        let hit = self.prefix[k];
        let tpr = (pos > 0).then(|| hit as f64 / pos as f64);
        let fpr = (neg > 0).then(|| (k - hit) as f64 / neg as f64);
        (tpr, fpr)
    }
}

fn rate_gap(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs(),
        _ => 0.0,
    }
}

/// Threshold search over the female count: among splits meeting the
/// tolerance, keep the one with the highest total screening score; if none
/// does, keep the smallest gap and flag it.
fn rate_parity(pool: &[Applicant], r: &Ranked, k: usize, policy: &Policy) -> Shortlist {
    let f = GroupLabels::new(pool, &r.women);
    let m = GroupLabels::new(pool, &r.men);
    let lo = k.saturating_sub(m.size());
    let hi = k.min(f.size());
    let mut best_ok: Option<(f64, usize, f64)> = None;
    let mut best_gap: Option<(f64, f64, usize)> = None;
    for kf in lo..=hi {
        let km = k - kf;
        let gap = match policy.kind {
            PolicyKind::ErrorRateParity => (f.error_rate(kf) - m.error_rate(km)).abs(),
            _ => {
                let (tf, ff) = f.tpr_fpr(kf);
                let (tm, fm) = m.tpr_fpr(km);
                rate_gap(tf, tm).max(rate_gap(ff, fm))
            }
        };
        let total = f.score[kf] + m.score[km];
        if gap <= policy.tolerance && best_ok.is_none_or(|(s, _, _)| total > s) {
            best_ok = Some((total, kf, gap));
        }
        if best_gap.is_none_or(|(g, s, _)| gap < g || (gap == g && total > s)) {
            best_gap = Some((gap, total, kf));
        }
    }
    match (best_ok, best_gap) {
        (Some((_, kf, gap)), _) => Shortlist { members: r.take(kf, k - kf), constraint_met: true, gap },
        (None, Some((gap, _, kf))) => Shortlist { members: r.take(kf, k - kf), constraint_met: false, gap },
        // lo > hi cannot happen once k <= n
        (None, None) => Shortlist { members: Vec::new(), constraint_met: false, gap: f64::INFINITY },
    }
}

fn mean_of(pool: &[Applicant], idx: &[usize], key: fn(&Applicant) -> f64) -> f64 {
    idx.iter().map(|&i| key(&pool[i])).sum::<f64>() / idx.len() as f64
}

/// Equal counts with women taken by screening score and men chosen from the
/// top candidates by screening score to bring the group means of `key`
/// together. Starts from the top men by screening score and applies the best
/// single swap with the candidate band until the absolute gap stops falling.
fn matched(pool: &[Applicant], r: &Ranked, k: usize, policy: &Policy, key: fn(&Applicant) -> f64) -> Result<Shortlist> {
    let (kf, km) = r.equal_split(pool, k)?;
    let women = &r.women[..kf];
    if kf == 0 || km == 0 {
        return Ok(Shortlist { members: r.take(kf, km), constraint_met: true, gap: 0.0 });
    }
    let target = mean_of(pool, women, key);
    let width = ((policy.candidate_pool_multiplier * km as f64).ceil() as usize).clamp(km, r.men.len());
    let mut chosen: Vec<usize> = r.men[..km].to_vec();
    let mut bench: Vec<usize> = r.men[km..width].to_vec();
    let mut sum: f64 = chosen.iter().map(|&i| key(&pool[i])).sum();
    let gap_of = |s: f64| (s / km as f64 - target).abs();
    loop {
        let current = gap_of(sum);
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, &out) in chosen.iter().enumerate() {
            for (b, &inn) in bench.iter().enumerate() {
                let g = gap_of(sum - key(&pool[out]) + key(&pool[inn]));
                if g < current - 1e-15 && best.is_none_or(|(bg, _, _)| g < bg) {
                    best = Some((g, a, b));
                }
            }
        }
        match best {
            Some((_, a, b)) => {
                sum += key(&pool[bench[b]]) - key(&pool[chosen[a]]);
                std::mem::swap(&mut chosen[a], &mut bench[b]);
            }
            None => break,
        }
    }
    let gap = gap_of(sum);
    let mut members: Vec<usize> = women.iter().chain(&chosen).copied().collect();
    members.sort_unstable();
    Ok(Shortlist { members, constraint_met: true, gap })
}

/// Top min(m, |shortlist|) of the shortlist by hiring score; ties go to the
/// lower pool index.
pub fn hire(pool: &[Applicant], shortlist: &[usize], m: usize) -> Result<Vec<usize>> {
    if shortlist.is_empty() {
        return Err(domain("cannot hire from an empty shortlist"));
    }
    if m == 0 {
        return Err(domain("hire count must be at least 1"));
    }
    if let Some(&i) = shortlist.iter().find(|&&i| i >= pool.len()) {
        return Err(domain(format!("shortlist index {i} outside the pool")));
    }
    let mut order = shortlist.to_vec();
    order.sort_by(|&a, &b| pool[b].q_h.partial_cmp(&pool[a].q_h).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order.truncate(m);
    order.sort_unstable();
    Ok(order)
}
