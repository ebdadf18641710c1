use tabula_core::bench::Portfolio;

/// Exhaustive optimum over ordered tuples of distinct stocks.
pub fn portfolio_oracle(pf: &Portfolio) -> Option<i128> {
    fn rec(pf: &Portfolio, chosen: &mut Vec<usize>, best: &mut Option<i128>) {
        let n = pf.picks();
        if chosen.len() == n {
            let total = pf.total() as i128;
            let (sn, sd) = pf.sector_cap;
            let (cn, cd) = pf.smallcap_cap;
            for s in 0..pf.sectors {
                let share: i128 = chosen
                    .iter()
                    .zip(&pf.amounts)
                    .filter(|(&k, _)| pf.stocks[k][2] == s)
                    .map(|(_, &a)| a as i128)
                    .sum();
                if sd as i128 * share > sn as i128 * total {
                    return;
                }
            }
            let small: i128 = chosen
                .iter()
                .zip(&pf.amounts)
                .filter(|(&k, _)| pf.stocks[k][1] == 0)
                .map(|(_, &a)| a as i128)
                .sum();
            if cd as i128 * small > cn as i128 * total {
                return;
            }
            let value: i128 = chosen
                .iter()
                .zip(&pf.amounts)
                .map(|(&k, &a)| {
                    let id = pf.stocks[k][0];
                    let diff = pf.quotes.iter().find(|q| q[0] == id).unwrap()[1];
                    a as i128 * diff as i128
                })
                .sum();
            *best = Some(best.map_or(value, |b| b.max(value)));
            return;
        }
        for k in 0..pf.stocks.len() {
            if !chosen.contains(&k) {
                chosen.push(k);
                rec(pf, chosen, best);
                chosen.pop();
            }
        }
    }
    let mut best = None;
    rec(pf, &mut Vec::new(), &mut best);
    best
}
