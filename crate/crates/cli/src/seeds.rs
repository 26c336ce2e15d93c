use std::collections::BTreeSet;
use std::str::FromStr;

/// Seeds given as an inclusive range `a..b` (or `a..=b`), a comma list, or a
/// single number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
        let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
            let (lo, hi) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
            if hi < lo {
                return Err(format!("empty seed range {lo}..{hi}"));
            }
            (lo..=hi).collect()
        } else {
            s.split(',').map(num).collect::<Result<_, _>>()?
        };
        let mut seen = BTreeSet::new();
        if let Some(dup) = seeds.iter().find(|&&x| !seen.insert(x)) {
            return Err(format!("seed {dup} given twice"));
        }
        Ok(SeedList(seeds))
    }
}
