//! Evaluation statistics: Kaplan-Meier curves, two-group log-rank test,
//! Harrell's concordance index, group hazard ratios, and the risk-threshold
//! grid search.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::survival::cox::newton_univariate;
use crate::survival::SurvivalRecord;

/// Product-limit survival estimate: one (time, S(time)) step per distinct
/// event time. Censored subjects shrink the risk set without a factor; an
/// all-censored cohort yields no steps (S stays 1).
pub fn kaplan_meier(records: &[SurvivalRecord]) -> Result<Vec<(f64, f64)>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("empty cohort".into()));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].time_days.total_cmp(&records[b].time_days));

    let n = records.len();
    let mut curve = Vec::new();
    let mut s = 1.0;
    let mut i = 0;
    let mut at_risk = n;
    while i < order.len() {
        let t = records[order[i]].time_days;
        let mut deaths = 0usize;
        let mut leaving = 0usize;
        while i < order.len() && records[order[i]].time_days == t {
            if records[order[i]].event {
                deaths += 1;
            }
            leaving += 1;
            i += 1;
        }
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / at_risk as f64;
            curve.push((t, s));
        }
        at_risk -= leaving;
    }
    Ok(curve)
}

/// Two-group log-rank test with hypergeometric variance. Returns the
/// chi-square statistic (1 df) and its p-value; a zero-variance degenerate
/// comparison yields (0, 1).
pub fn logrank(
    group_a: &[SurvivalRecord],
    group_b: &[SurvivalRecord],
) -> Result<(f64, f64)> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::InvalidInput("both groups must be nonempty".into()));
    }
    let n_events = group_a.iter().chain(group_b).filter(|r| r.event).count();
    if n_events == 0 {
        return Err(Error::Degenerate("no events in either group".into()));
    }

    // pooled distinct event times
    let mut times: Vec<f64> = group_a
        .iter()
        .chain(group_b)
        .filter(|r| r.event)
        .map(|r| r.time_days)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut observed_minus_expected = 0.0;
    let mut variance = 0.0;
    for &t in &times {
        let n1 = group_a.iter().filter(|r| r.time_days >= t).count() as f64;
        let n2 = group_b.iter().filter(|r| r.time_days >= t).count() as f64;
        let d1 = group_a
            .iter()
            .filter(|r| r.event && r.time_days == t)
            .count() as f64;
        let d2 = group_b
            .iter()
            .filter(|r| r.event && r.time_days == t)
            .count() as f64;
        let n = n1 + n2;
        let d = d1 + d2;
        if n < 2.0 {
            continue;
        }
        observed_minus_expected += d1 - d * n1 / n;
        variance += d * (n1 / n) * (n2 / n) * (n - d) / (n - 1.0);
    }

    if variance <= 0.0 {
        return Ok((0.0, 1.0));
    }
    let chi2 = observed_minus_expected * observed_minus_expected / variance;
    Ok((chi2, chi2_sf_1df(chi2)))
}

/// Survival function of the chi-square distribution with one degree of
/// freedom, accurate in the far tail.
fn chi2_sf_1df(x: f64) -> f64 {
    erfc((x / 2.0).sqrt())
}

/// Harrell's concordance index over permissible pairs (the earlier time
/// carries an event); risk ties count one half.
pub fn concordance_index(risks: &[f64], records: &[SurvivalRecord]) -> Result<f64> {
    if risks.len() != records.len() {
        return Err(Error::InvalidInput(format!(
            "{} risks for {} records",
            risks.len(),
            records.len()
        )));
    }
    let mut concordant = 0.0;
    let mut pairs = 0u64;
    for i in 0..records.len() {
        if !records[i].event {
            continue;
        }
        for j in 0..records.len() {
            if records[i].time_days < records[j].time_days {
                pairs += 1;
                if risks[i] > risks[j] {
                    concordant += 1.0;
                } else if risks[i] == risks[j] {
                    concordant += 0.5;
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::Degenerate(
            "no permissible pairs for the concordance index".into(),
        ));
    }
    Ok(concordant / pairs as f64)
}

/// Group hazard ratio with 95% confidence interval from a univariate Cox
/// fit on the group indicator (true = numerator group).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardRatio {
    pub hr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub beta: f64,
    pub se: f64,
}

pub fn hazard_ratio(group: &[bool], records: &[SurvivalRecord]) -> Result<HazardRatio> {
    if group.len() != records.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} records",
            group.len(),
            records.len()
        )));
    }
    for side in [true, false] {
        let events = group
            .iter()
            .zip(records)
            .filter(|(&g, r)| g == side && r.event)
            .count();
        if events == 0 {
            return Err(Error::Degenerate(format!(
                "group {side} has no events: hazard ratio separation, confidence interval unbounded"
            )));
        }
    }
    let x: Vec<f64> = group.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
    let (beta, se) = newton_univariate(&x, records)?;
    Ok(HazardRatio {
        hr: beta.exp(),
        ci_low: (beta - 1.96 * se).exp(),
        ci_high: (beta + 1.96 * se).exp(),
        beta,
        se,
    })
}

/// Result of the risk-cutoff grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSearch {
    pub threshold: f64,
    pub p_value: f64,
    pub n_candidates: usize,
}

/// Type-7 (linear interpolation) quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Grid-search the risk cutoff over the 10th..90th percentiles of the risk
/// distribution, minimizing the two-group log-rank p-value subject to each
/// group holding at least 10% of subjects; p-value ties resolve toward the
/// median cutoff. The reported p-value is uncorrected for the search.
pub fn find_threshold(risks: &[f64], records: &[SurvivalRecord]) -> Result<ThresholdSearch> {
    if risks.len() != records.len() {
        return Err(Error::InvalidInput(format!(
            "{} risks for {} records",
            risks.len(),
            records.len()
        )));
    }
    let mut sorted = risks.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() || sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::Degenerate(
            "all risk scores identical; no cutoff can separate groups".into(),
        ));
    }

    let mut candidates: Vec<f64> = (10..=90)
        .map(|p| quantile_sorted(&sorted, p as f64 / 100.0))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let median = quantile_sorted(&sorted, 0.5);
    let min_size = 0.10 * risks.len() as f64;

    let mut best: Option<(f64, f64)> = None; // (p, cutoff)
    for &cut in &candidates {
        let high: Vec<SurvivalRecord> = records
            .iter()
            .zip(risks)
            .filter(|(_, &r)| r > cut)
            .map(|(rec, _)| rec.clone())
            .collect();
        let low: Vec<SurvivalRecord> = records
            .iter()
            .zip(risks)
            .filter(|(_, &r)| r <= cut)
            .map(|(rec, _)| rec.clone())
            .collect();
        if (high.len() as f64) < min_size || (low.len() as f64) < min_size {
            continue;
        }
        let Ok((_, p)) = logrank(&high, &low) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((bp, bc)) => {
                p < bp || (p == bp && (cut - median).abs() < (bc - median).abs())
            }
        };
        if better {
            best = Some((p, cut));
        }
    }

    match best {
        Some((p, cut)) => Ok(ThresholdSearch {
            threshold: cut,
            p_value: p,
            n_candidates: candidates.len(),
        }),
        None => Err(Error::Degenerate(
            "no cutoff satisfies the 10% group-size constraint".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rec(time: f64, event: bool) -> SurvivalRecord {
        SurvivalRecord::new("s", time, event).unwrap()
    }

    #[test]
    fn km_three_subject_hand_example() {
        // deaths at 1 and 2, censored at 3
        let records = vec![rec(1.0, true), rec(2.0, true), rec(3.0, false)];
        let curve = kaplan_meier(&records).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[0], (1.0, 1.0 - 1.0 / 3.0));
        assert_eq!(curve[1], (2.0, (1.0 - 1.0 / 3.0) * (1.0 - 1.0 / 2.0)));
    }

    #[test]
    fn km_all_censored_stays_at_one() {
        let records = vec![rec(1.0, false), rec(2.0, false)];
        assert!(kaplan_meier(&records).unwrap().is_empty());
    }

    #[test]
    fn km_without_censoring_is_empirical_survival() {
        let records = vec![rec(1.0, true), rec(2.0, true), rec(3.0, true), rec(4.0, true)];
        let curve = kaplan_meier(&records).unwrap();
        let expect = [(1.0, 0.75), (2.0, 0.5), (3.0, 0.25), (4.0, 0.0)];
        for ((t, s), (et, es)) in curve.iter().zip(expect) {
            assert_eq!(*t, et);
            assert!((s - es).abs() < 1e-15);
        }
    }

    #[test]
    fn km_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let records: Vec<SurvivalRecord> = (0..200)
            .map(|_| rec(rng.random::<f64>() * 100.0 + 0.1, rng.random_bool(0.6)))
            .collect();
        let curve = kaplan_meier(&records).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1);
            assert!(w[1].0 > w[0].0);
        }
        assert!(curve.first().map(|&(_, s)| s <= 1.0).unwrap_or(true));
    }

    #[test]
    fn logrank_identical_groups_is_null() {
        let g: Vec<SurvivalRecord> = vec![rec(1.0, true), rec(2.0, false), rec(3.0, true)];
        let (chi2, p) = logrank(&g, &g.clone()).unwrap();
        assert!(chi2.abs() < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logrank_six_subject_hand_table() {
        // group A: events at 1, 3, censored at 5; group B: events at 2, 4, 6.
        // Hand tally of O−E and hypergeometric variances over event times
        // {1,2,3,4,6}: O_A − E_A = 4/15, Var = 433/450, chi² = 32/433.
        let a = vec![rec(1.0, true), rec(3.0, true), rec(5.0, false)];
        let b = vec![rec(2.0, true), rec(4.0, true), rec(6.0, true)];
        let (chi2, p) = logrank(&a, &b).unwrap();
        assert!((chi2 - 32.0 / 433.0).abs() < 1e-10, "chi2 {chi2}");
        assert!((p - erfc((32.0f64 / 433.0 / 2.0).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn logrank_strong_separation() {
        let a: Vec<SurvivalRecord> = (1..=50).map(|i| rec(i as f64, true)).collect();
        let b: Vec<SurvivalRecord> = (1..=50).map(|i| rec(i as f64 * 10.0, true)).collect();
        let (_, p) = logrank(&a, &b).unwrap();
        assert!(p < 0.001, "p = {p}");
    }

    #[test]
    fn logrank_degenerate_variance() {
        // single subject per group, one event: variance term skipped (n < 2
        // never happens here, but d = n kills the (n−d) factor)
        let a = vec![rec(1.0, true)];
        let b = vec![rec(1.0, true)];
        let (chi2, p) = logrank(&a, &b).unwrap();
        assert_eq!((chi2, p), (0.0, 1.0));
    }

    #[test]
    fn concordance_perfect_and_chance() {
        let records: Vec<SurvivalRecord> = (1..=20).map(|i| rec(i as f64, true)).collect();
        let anti: Vec<f64> = (1..=20).map(|i| -(i as f64)).collect();
        assert_eq!(concordance_index(&anti, &records).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let records: Vec<SurvivalRecord> = (0..2000)
            .map(|_| rec(rng.random::<f64>() * 100.0 + 1e-3, true))
            .collect();
        let risks: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let c = concordance_index(&risks, &records).unwrap();
        assert!((c - 0.5).abs() < 0.05, "c = {c}");
    }

    #[test]
    fn concordance_matches_all_pairs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let n = 30;
            let records: Vec<SurvivalRecord> = (0..n)
                .map(|_| rec(rng.random_range(1..15) as f64, rng.random_bool(0.7)))
                .collect();
            if !records.iter().any(|r| r.event) {
                continue;
            }
            let risks: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();

            // oracle: literal double loop over ordered pairs
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if records[i].event && records[i].time_days < records[j].time_days {
                        den += 1.0;
                        if risks[i] > risks[j] {
                            num += 1.0;
                        } else if risks[i] == risks[j] {
                            num += 0.5;
                        }
                    }
                }
            }
            if den == 0.0 {
                continue;
            }
            assert_eq!(concordance_index(&risks, &records).unwrap(), num / den);
        }
    }

    #[test]
    fn concordance_flips_under_negation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let records: Vec<SurvivalRecord> = (0..50)
            .map(|_| rec(rng.random::<f64>() * 10.0 + 0.1, rng.random_bool(0.5)))
            .collect();
        let risks: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let c = concordance_index(&risks, &records).unwrap();
        let neg: Vec<f64> = risks.iter().map(|r| -r).collect();
        let cn = concordance_index(&neg, &records).unwrap();
        assert!((c + cn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hazard_ratio_identical_groups_spans_one() {
        let mut records = Vec::new();
        let mut labels = Vec::new();
        for i in 1..=30 {
            records.push(rec(i as f64, i % 3 != 0));
            labels.push(false);
            records.push(rec(i as f64, i % 3 != 0));
            labels.push(true);
        }
        let hr = hazard_ratio(&labels, &records).unwrap();
        assert!((hr.hr - 1.0).abs() < 1e-6);
        assert!(hr.ci_low < 1.0 && 1.0 < hr.ci_high);
    }

    #[test]
    fn hazard_ratio_label_swap_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let records: Vec<SurvivalRecord> = (0..60)
            .map(|_| rec(rng.random::<f64>() * 50.0 + 0.5, rng.random_bool(0.8)))
            .collect();
        let labels: Vec<bool> = (0..60).map(|i| i % 2 == 0).collect();
        let swapped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let a = hazard_ratio(&labels, &records).unwrap();
        let b = hazard_ratio(&swapped, &records).unwrap();
        assert!((a.hr * b.hr - 1.0).abs() < 1e-9, "{} vs {}", a.hr, b.hr);
    }

    #[test]
    fn hazard_ratio_recovers_planted_doubling() {
        // group true has twice the hazard: exponential times with rate
        // h0·2^x, n = 500, fixed seed
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let mut records = Vec::new();
        let mut labels = Vec::new();
        for i in 0..500 {
            let high = i % 2 == 0;
            let rate = if high { 0.02 } else { 0.01 };
            let u: f64 = rng.random();
            records.push(rec((-(1.0 - u).ln() / rate).max(1e-9), true));
            labels.push(high);
        }
        let hr = hazard_ratio(&labels, &records).unwrap();
        assert!(
            hr.hr > 1.6 && hr.hr < 2.5,
            "estimated hazard ratio {} outside [1.6, 2.5]",
            hr.hr
        );
        assert!(hr.ci_low < hr.hr && hr.hr < hr.ci_high);
    }

    #[test]
    fn hazard_ratio_separation_flagged() {
        let records = vec![rec(1.0, true), rec(2.0, false), rec(3.0, true)];
        let labels = vec![true, false, true]; // group false: only censored
        assert!(matches!(
            hazard_ratio(&labels, &records),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn threshold_lands_between_planted_clusters() {
        let mut risks = Vec::new();
        let mut records = Vec::new();
        for i in 0..20 {
            risks.push(0.0);
            records.push(rec(100.0 + i as f64, true)); // low risk live long
            risks.push(1.0);
            records.push(rec(1.0 + i as f64, true)); // high risk die fast
        }
        let found = find_threshold(&risks, &records).unwrap();
        assert!(
            found.threshold > 0.0 && found.threshold < 1.0,
            "threshold {} not strictly between clusters",
            found.threshold
        );
        assert!(found.p_value < 1e-6);
        assert!(found.n_candidates >= 1);
    }

    #[test]
    fn threshold_recovers_noisy_planted_groups() {
        // overlapping risk clusters with separated survival: the chosen
        // cutoff should recover at least 90% of the planted labels
        let mut rng = ChaCha8Rng::seed_from_u64(31173);
        let n = 200;
        let mut risks = Vec::new();
        let mut records = Vec::new();
        let mut truth = Vec::new();
        for i in 0..n {
            let high = i % 2 == 0;
            let center = if high { 1.0 } else { 0.0 };
            risks.push(center + (rng.random::<f64>() - 0.5) * 0.6);
            let rate = if high { 0.05 } else { 0.005 };
            let u: f64 = rng.random();
            records.push(rec((-(1.0 - u).ln() / rate).max(1e-9), true));
            truth.push(high);
        }
        let found = find_threshold(&risks, &records).unwrap();
        let correct = risks
            .iter()
            .zip(&truth)
            .filter(|(&r, &t)| (r > found.threshold) == t)
            .count();
        assert!(
            correct * 10 >= n * 9,
            "threshold {} recovers only {correct}/{n} labels",
            found.threshold
        );
    }

    #[test]
    fn threshold_on_identical_risks_is_an_error() {
        let risks = vec![0.5; 10];
        let records: Vec<SurvivalRecord> = (1..=10).map(|i| rec(i as f64, true)).collect();
        assert!(find_threshold(&risks, &records).is_err());
    }

    #[test]
    fn threshold_exchangeable_survival_is_not_significant() {
        // monotone risks, survival independent of risk: the optimal cutoff
        // should not reach significance on a large cohort
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let n = 400;
        let risks: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let records: Vec<SurvivalRecord> = (0..n)
            .map(|_| rec(-rng.random::<f64>().ln() * 100.0 + 1e-6, true))
            .collect();
        let found = find_threshold(&risks, &records).unwrap();
        assert!(found.p_value > 0.05, "p = {}", found.p_value);
    }
}
