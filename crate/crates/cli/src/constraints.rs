use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use pauligw::bits::Bits;
use pauligw::instances::Instance;
use pauligw::pauli::{diagonal_group, enumerate_traceless, krylov_constraints, ConstraintSet, DEFAULT_ENUMERATION_CAP};

/// How the constraint set of a solve is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Every traceless element of the diagonal group.
    Auto,
    /// No constraints: the spectral relaxation.
    None,
    /// Z-strings reached by products of at most `k` terms.
    Krylov(usize),
    /// A JSON array of Z-strings, written as `IZZI` or `0110`.
    File(PathBuf),
}

impl FromStr for ConstraintMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "auto" => Ok(ConstraintMode::Auto),
            "none" => Ok(ConstraintMode::None),
            _ => {
                if let Some(k) = s.strip_prefix("krylov:") {
                    let k: usize = k.parse().with_context(|| format!("bad Krylov order in {s:?}"))?;
                    if k == 0 {
                        bail!("Krylov order must be at least 1");
                    }
                    Ok(ConstraintMode::Krylov(k))
                } else if let Some(p) = s.strip_prefix("file:") {
                    Ok(ConstraintMode::File(PathBuf::from(p)))
                } else {
                    Err(anyhow!("unknown constraint mode {s:?} (auto|none|krylov:K|file:PATH)"))
                }
            }
        }
    }
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintMode::Auto => f.write_str("auto"),
            ConstraintMode::None => f.write_str("none"),
            ConstraintMode::Krylov(k) => write!(f, "krylov:{k}"),
            ConstraintMode::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Parse Z-string labels; `Z`/`1` mark a Z factor, `I`/`0` the identity.
pub fn constraints_from_labels(n: usize, labels: &[String]) -> anyhow::Result<ConstraintSet> {
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        let bools = l
            .chars()
            .map(|c| match c {
                'Z' | 'z' | '1' => Ok(true),
                'I' | 'i' | '0' => Ok(false),
                _ => Err(anyhow!("constraint {l:?} is not a Z-string")),
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        if bools.len() != n {
            bail!("constraint {l:?} has {} sites, instance has {n}", bools.len());
        }
        out.push(Bits::from_bools(&bools));
    }
    Ok(ConstraintSet::new(n, out)?)
}

fn read_file(path: &Path, n: usize) -> anyhow::Result<ConstraintSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let labels: Vec<String> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    constraints_from_labels(n, &labels)
}

/// The constraint set `mode` selects for an explicit instance.
pub fn resolve(inst: &Instance, mode: &ConstraintMode) -> anyhow::Result<ConstraintSet> {
    let n = inst.num_qubits();
    Ok(match mode {
        ConstraintMode::Auto => enumerate_traceless(&diagonal_group(&inst.op), DEFAULT_ENUMERATION_CAP)?,
        ConstraintMode::None => ConstraintSet::empty(n),
        ConstraintMode::Krylov(k) => {
            let r = krylov_constraints(&inst.op, *k, DEFAULT_ENUMERATION_CAP)?;
            if r.truncated {
                bail!("Krylov search of order {k} stopped at the cap after {} products", r.visited);
            }
            r.set
        }
        ConstraintMode::File(p) => read_file(p, n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pauligw::instances::gen_commuting4;

    #[test]
    fn parse_round_trip() {
        for s in ["auto", "none", "krylov:3", "file:cons.json"] {
            assert_eq!(s.parse::<ConstraintMode>().unwrap().to_string(), s);
        }
        assert!("krylov:0".parse::<ConstraintMode>().is_err());
        assert!("krylov:x".parse::<ConstraintMode>().is_err());
        assert!("all".parse::<ConstraintMode>().is_err());
    }

    #[test]
    fn labels_accept_both_spellings() {
        let a = constraints_from_labels(4, &["ZZII".into(), "0110".into()]).unwrap();
        assert_eq!(a.labels(), vec!["ZZII", "IZZI"]);
        assert!(constraints_from_labels(3, &["ZZII".into()]).is_err());
        assert!(constraints_from_labels(2, &["XZ".into()]).is_err());
    }

    #[test]
    fn auto_on_commuting4() {
        let inst = gen_commuting4();
        let s = resolve(&inst, &ConstraintMode::Auto).unwrap();
        assert_eq!(s.len(), 3);
        assert!(resolve(&inst, &ConstraintMode::None).unwrap().is_empty());
        let back = constraints_from_labels(4, &s.labels()).unwrap();
        assert_eq!(back, s);
    }
}
