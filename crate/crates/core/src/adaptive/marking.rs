//! Bulk marking and enrichment counts for the offline loop.

/// Indices sorted by descending value, ties by ascending index.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&p, &q| values[q].total_cmp(&values[p]).then(p.cmp(&q)));
    order
}

/// Smallest leading set of the descending order whose indicator mass reaches
/// `theta * sum`. At least one index is marked whenever the sum is positive.
pub fn offline_mark(indicator_sq: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = indicator_sq.iter().sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let mut order = descending_order(indicator_sq);
    let target = theta * total;
    let mut acc = 0.0;
    let mut k = 0;
    while k < order.len() && acc < target {
        acc += indicator_sq[order[k]];
        k += 1;
    }
    order.truncate(k.max(1));
    order
}

/// Smallest `s >= 1` with `lambda_{l+1} / lambda_{l+s+1} <= delta0`, capped at `J - l`.
///
/// `lambdas` is ascending and zero-based, so `lambda_{k}` is `lambdas[k - 1]`;
/// entries past the end count as `+inf`.
pub fn offline_enrich_count(lambdas: &[f64], l: usize, delta0: f64) -> usize {
    let j = lambdas.len();
    if l >= j {
        return 0;
    }
    let lam = |k: usize| lambdas.get(k).copied().unwrap_or(f64::INFINITY);
    let base = lam(l);
    let cap = j - l;
    (1..=cap)
        .find(|&s| base / lam(l + s) <= delta0)
        .unwrap_or(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn marking_examples() {
        let eta = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(offline_mark(&eta, 0.2), vec![0]);
        assert_eq!(offline_mark(&eta, 0.75), vec![0, 1, 2]);
        assert_eq!(offline_mark(&eta, 0.0), vec![0]);
        assert!(offline_mark(&[0.0, 0.0], 0.5).is_empty());
    }

    #[test]
    fn ties_go_to_lower_index() {
        assert_eq!(offline_mark(&[1.0, 2.0, 2.0, 1.0], 0.3), vec![1]);
        assert_eq!(descending_order(&[1.0, 2.0, 2.0, 1.0]), vec![1, 2, 0, 3]);
    }

    #[test]
    fn enrich_count_examples() {
        assert_eq!(offline_enrich_count(&[1.0, 2.0, 10.0], 0, 0.7), 1);
        assert_eq!(offline_enrich_count(&[1.0, 1.1, 10.0], 0, 0.5), 2);
        assert_eq!(offline_enrich_count(&[1.0, 1.0, 1.0], 2, 0.1), 1);
        assert_eq!(offline_enrich_count(&[1.0, 1.0, 1.0], 0, 0.1), 3);
        assert_eq!(offline_enrich_count(&[1.0], 1, 0.5), 0);
    }

    proptest! {
        #[test]
        fn marking_is_minimal(
            eta in prop::collection::vec(0.0f64..10.0, 1..30),
            theta in 0.0f64..1.0,
        ) {
            let total: f64 = eta.iter().sum();
            let marked = offline_mark(&eta, theta);
            if total > 0.0 {
                prop_assert!(!marked.is_empty());
                let mass: f64 = marked.iter().map(|&i| eta[i]).sum();
                prop_assert!(mass >= theta * total * (1.0 - 1e-12));
                let shorter: f64 = marked[..marked.len() - 1].iter().map(|&i| eta[i]).sum();
                prop_assert!(marked.len() == 1 || shorter < theta * total);
                // marked entries dominate unmarked ones
                let min_marked = marked.iter().map(|&i| eta[i]).fold(f64::INFINITY, f64::min);
                for i in 0..eta.len() {
                    if !marked.contains(&i) {
                        prop_assert!(eta[i] <= min_marked);
                    }
                }
            }
        }

        #[test]
        fn enrich_count_is_smallest_admissible(
            mut lam in prop::collection::vec(0.01f64..100.0, 1..12),
            l_frac in 0.0f64..1.0,
            delta0 in 0.05f64..0.95,
        ) {
            lam.sort_by(f64::total_cmp);
            let l = ((lam.len() as f64) * l_frac) as usize;
            let s = offline_enrich_count(&lam, l, delta0);
            prop_assert!(s >= 1 && l + s <= lam.len());
            let at = |k: usize| lam.get(k).copied().unwrap_or(f64::INFINITY);
            for t in 1..s {
                prop_assert!(at(l) / at(l + t) > delta0);
            }
            if l + s < lam.len() {
                prop_assert!(at(l) / at(l + s) <= delta0);
            }
        }
    }
}
