use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Instance, InstanceFlags};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::pauli::{PauliOperator, PauliString};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermRecord {
    pub x: String,
    pub z: String,
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FlagsRecord {
    pub real_symmetric: bool,
    pub commuting_1d: bool,
    pub window_width: Option<usize>,
}

/// On-disk layout of an instance.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InstanceFile {
    pub n: usize,
    pub terms: Vec<TermRecord>,
    pub norm_upper_bound: Option<f64>,
    pub flags: FlagsRecord,
    pub seed: Option<u64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

pub fn instance_to_json(inst: &Instance) -> Result<String> {
    if inst.is_implicit() {
        return Err(Error::InvalidInstance(
            "implicit Kronecker instances are stored as spec files, not instance files".into(),
        ));
    }
    let terms = inst
        .op
        .terms()
        .map(|(p, c)| TermRecord {
            x: p.x().to_string(),
            z: p.z().to_string(),
            coeff: c,
            group: inst.groups.get(p).copied(),
        })
        .collect();
    let file = InstanceFile {
        n: inst.op.num_qubits(),
        terms,
        norm_upper_bound: inst.op.explicit_norm_bound(),
        flags: FlagsRecord {
            real_symmetric: inst.flags.real_symmetric,
            commuting_1d: inst.flags.commuting_1d,
            window_width: inst.flags.window_width,
        },
        seed: inst.seed,
        metadata: inst.metadata.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn instance_from_json(s: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(s)?;
    let n = file.n;
    let mut op = PauliOperator::new(n);
    let mut groups = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (i, t) in file.terms.iter().enumerate() {
        let parse = |s: &str, what: &str| -> Result<Bits> {
            let b = Bits::parse(s)
                .ok_or_else(|| Error::InvalidInstance(format!("term {i}: {what} is not a 0/1 string")))?;
            if b.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "term {i}: {what} has length {}, expected {n}",
                    b.len()
                )));
            }
            Ok(b)
        };
        let p = PauliString::from_bits(parse(&t.x, "x")?, parse(&t.z, "z")?)?;
        if t.coeff == 0.0 || !t.coeff.is_finite() {
            return Err(Error::InvalidInstance(format!("term {i} ({p}) has coefficient {}", t.coeff)));
        }
        if !seen.insert(p.clone()) {
            return Err(Error::InvalidInstance(format!("duplicate term {p}")));
        }
        if let Some(g) = t.group {
            groups.insert(p.clone(), g);
        }
        op.add_term(p, t.coeff)?;
    }
    op.set_norm_upper_bound(file.norm_upper_bound)?;
    let inst = Instance {
        op,
        groups,
        flags: InstanceFlags {
            real_symmetric: file.flags.real_symmetric,
            commuting_1d: file.flags.commuting_1d,
            window_width: file.flags.window_width,
        },
        seed: file.seed,
        metadata: file.metadata,
        kronecker: None,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, instance_to_json(inst)? + "\n")?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_cluster1d, gen_commuting4};

    #[test]
    fn roundtrip_preserves_everything() {
        for inst in [gen_cluster1d(9, 11).unwrap(), gen_commuting4()] {
            let back = instance_from_json(&instance_to_json(&inst).unwrap()).unwrap();
            assert_eq!(inst, back);
        }
    }

    #[test]
    fn qubit_one_is_leftmost() {
        let inst = gen_cluster1d(7, 0).unwrap();
        let json = instance_to_json(&inst).unwrap();
        // X1 Z2 has x = 1000000, z = 0100000.
        assert!(json.contains("\"x\": \"1000000\",\n      \"z\": \"0100000\""));
    }

    #[test]
    fn zero_coefficient_rejected() {
        let s = r#"{"n":1,"terms":[{"x":"1","z":"0","coeff":0.0}],"norm_upper_bound":null,
            "flags":{"real_symmetric":true,"commuting_1d":false,"window_width":null},"seed":null,"metadata":{}}"#;
        assert!(matches!(instance_from_json(s), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn length_mismatch_rejected() {
        let s = r#"{"n":2,"terms":[{"x":"1","z":"0","coeff":1.0}],"norm_upper_bound":null,
            "flags":{"real_symmetric":true,"commuting_1d":false,"window_width":null},"seed":null,"metadata":{}}"#;
        assert!(instance_from_json(s).is_err());
    }

    #[test]
    fn false_commuting_flag_rejected() {
        let mut inst = gen_commuting4();
        inst.flags.commuting_1d = true;
        inst.flags.window_width = Some(4);
        let json = instance_to_json(&inst).unwrap();
        let err = instance_from_json(&json).unwrap_err();
        assert!(err.to_string().contains("do not commute"), "{err}");
    }
}
