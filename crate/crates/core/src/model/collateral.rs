use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    /// Units available in inventory.
    pub quantity: f64,
    /// USD per unit.
    pub unit_value: f64,
    /// Quality score in [0, 1].
    pub tier: f64,
}

impl Asset {
    pub fn market_value(&self) -> f64 {
        self.quantity * self.unit_value
    }
}

/// Account term. Serialised as the integer flag `1` (short) / `0` (long).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Duration {
    Long,
    Short,
}

impl Duration {
    pub fn flag(self) -> f64 {
        match self {
            Duration::Long => 0.0,
            Duration::Short => 1.0,
        }
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.flag() as u8)
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(Duration::Long),
            1 => Ok(Duration::Short),
            other => Err(serde::de::Error::custom(format!(
                "duration must be 0 or 1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Account {
    /// Required collateral value in USD.
    pub exposure: f64,
    pub duration: Duration,
}

/// Many-to-one limits: `membership[i][g]` marks asset `i` as part of group
/// `g`, `caps[g][j]` bounds the quantity of group `g` posted to account `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Groups {
    pub membership: Vec<Vec<u8>>,
    pub caps: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollateralInstance {
    pub assets: Vec<Asset>,
    pub accounts: Vec<Account>,
    /// `haircut[i][j]` in (0, 1].
    pub haircut: Vec<Vec<f64>>,
    /// `limits[i][j]` in asset units; `None` is unbounded.
    pub limits: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Groups>,
}

impl CollateralInstance {
    /// Builds an instance with every pair unbounded and no groups.
    pub fn new(
        assets: Vec<Asset>,
        accounts: Vec<Account>,
        haircut: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let limits = vec![vec![None; accounts.len()]; assets.len()];
        let instance = Self {
            assets,
            accounts,
            haircut,
            limits,
            groups: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let instance: Self =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialises")
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_accounts(&self) -> usize {
        self.accounts.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.as_ref().map_or(0, |g| g.caps.len())
    }

    /// Collateral value in USD of posting the whole of asset `i` to account `j`
    /// (quantity × unit value × haircut).
    pub fn collateral_value(&self, i: usize, j: usize) -> f64 {
        self.assets[i].market_value() * self.haircut[i][j]
    }

    pub fn limit(&self, i: usize, j: usize) -> Option<f64> {
        self.limits[i][j]
    }

    pub fn total_exposure(&self) -> f64 {
        self.accounts.iter().map(|a| a.exposure).sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidInstance(msg));
        let (n, m) = (self.n_assets(), self.n_accounts());
        if n == 0 || m == 0 {
            return bad("instance needs at least one asset and one account".into());
        }
        for (i, a) in self.assets.iter().enumerate() {
            if !(a.quantity >= 0.0 && a.quantity.is_finite()) {
                return bad(format!("asset {i}: quantity must be a finite value >= 0"));
            }
            if !(a.unit_value >= 0.0 && a.unit_value.is_finite()) {
                return bad(format!("asset {i}: unit value must be a finite value >= 0"));
            }
            if !(0.0..=1.0).contains(&a.tier) {
                return bad(format!("asset {i}: tier {} outside [0, 1]", a.tier));
            }
        }
        for (j, acc) in self.accounts.iter().enumerate() {
            if !(acc.exposure >= 0.0 && acc.exposure.is_finite()) {
                return bad(format!("account {j}: exposure must be a finite value >= 0"));
            }
        }
        check_shape("haircut", &self.haircut, n, m)?;
        check_shape("limits", &self.limits, n, m)?;
        for (i, row) in self.haircut.iter().enumerate() {
            for (j, &h) in row.iter().enumerate() {
                if !(h > 0.0 && h <= 1.0) {
                    return bad(format!("haircut[{i}][{j}] = {h} outside (0, 1]"));
                }
            }
        }
        for (i, row) in self.limits.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    if !(*b >= 0.0) {
                        return bad(format!("limits[{i}][{j}] = {b} is negative"));
                    }
                }
            }
        }
        if let Some(groups) = &self.groups {
            check_shape("groups.membership", &groups.membership, n, groups.caps.len())?;
            if groups.membership.iter().flatten().any(|&t| t > 1) {
                return bad("group membership entries must be 0 or 1".into());
            }
            check_shape("groups.caps", &groups.caps, groups.caps.len(), m)?;
            if groups.caps.iter().flatten().any(|&k| !(k >= 0.0)) {
                return bad("group caps must be >= 0".into());
            }
        }
        Ok(())
    }
}

fn check_shape<T>(name: &str, rows: &[Vec<T>], n: usize, m: usize) -> Result<(), ModelError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != m) {
        let found = (rows.len(), rows.first().map_or(0, |r| r.len()));
        return Err(ModelError::InvalidInstance(format!(
            "{name} has shape {found:?}, expected ({n}, {m})"
        )));
    }
    Ok(())
}

/// Cost coefficients `|tier_i - duration_j|`: high-tier assets are cheap for
/// short-term accounts and expensive for long-term ones.
pub fn omega_matrix(instance: &CollateralInstance) -> Vec<Vec<f64>> {
    instance
        .assets
        .iter()
        .map(|a| {
            instance
                .accounts
                .iter()
                .map(|acc| (a.tier - acc.duration.flag()).abs())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asset(tier: f64) -> Asset {
        Asset {
            quantity: 10.0,
            unit_value: 1.0,
            tier,
        }
    }

    fn two_accounts() -> Vec<Account> {
        vec![
            Account {
                exposure: 1.0,
                duration: Duration::Short,
            },
            Account {
                exposure: 1.0,
                duration: Duration::Long,
            },
        ]
    }

    #[test]
    fn omega_examples() {
        let inst = CollateralInstance::new(
            vec![asset(0.8), asset(0.5)],
            two_accounts(),
            vec![vec![1.0; 2]; 2],
        )
        .unwrap();
        let omega = omega_matrix(&inst);
        assert!((omega[0][0] - 0.2).abs() < 1e-15);
        assert!((omega[0][1] - 0.8).abs() < 1e-15);
        assert_eq!(omega[1], vec![0.5, 0.5]);
    }

    #[test]
    fn validation_errors() {
        let err = CollateralInstance::new(vec![asset(1.2)], two_accounts(), vec![vec![1.0; 2]]);
        assert!(matches!(err, Err(ModelError::InvalidInstance(_))));
        let err = CollateralInstance::new(vec![asset(0.5)], two_accounts(), vec![vec![0.0, 1.0]]);
        assert!(err.is_err());
        let err = CollateralInstance::new(vec![asset(0.5)], two_accounts(), vec![vec![1.0]]);
        assert!(err.is_err());
    }

    #[test]
    fn json_document_shape() {
        let text = r#"{
            "assets": [{"quantity": 100, "unit_value": 1, "tier": 0.2}],
            "accounts": [{"exposure": 50, "duration": 0}, {"exposure": 5, "duration": 1}],
            "haircut": [[1.0, 0.9]],
            "limits": [[null, 20]],
            "groups": {"membership": [[1]], "caps": [[30, 40]]}
        }"#;
        let inst = CollateralInstance::from_json(text).unwrap();
        assert_eq!(inst.accounts[0].duration, Duration::Long);
        assert_eq!(inst.limit(0, 0), None);
        assert_eq!(inst.limit(0, 1), Some(20.0));
        assert_eq!(inst.n_groups(), 1);
        let back = CollateralInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);

        let bad = text.replace("\"duration\": 1", "\"duration\": 2");
        assert!(matches!(
            CollateralInstance::from_json(&bad),
            Err(ModelError::Parse(_))
        ));
    }
}
