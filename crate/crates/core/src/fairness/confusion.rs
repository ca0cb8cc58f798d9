use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Group;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, truth: bool, predicted: bool, weight: u64) {
        match (truth, predicted) {
            (true, true) => self.tp += weight,
            (false, true) => self.fp += weight,
            (false, false) => self.tn += weight,
            (true, false) => self.fn_ += weight,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub men: Confusion,
    pub women: Confusion,
}

impl GroupConfusion {
    pub fn get(&self, g: Group) -> &Confusion {
        match g {
            Group::A => &self.men,
            Group::B => &self.women,
        }
    }

    pub fn get_mut(&mut self, g: Group) -> &mut Confusion {
        match g {
            Group::A => &mut self.men,
            Group::B => &mut self.women,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            men: self.women,
            women: self.men,
        }
    }
}

pub fn confusion_by_group(
    y_true: &[bool],
    y_pred: &[bool],
    groups: &[Group],
) -> Result<GroupConfusion> {
    if y_pred.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if groups.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: groups.len(),
        });
    }
    let mut out = GroupConfusion::default();
    for ((&t, &p), &g) in y_true.iter().zip(y_pred).zip(groups) {
        out.get_mut(g).record(t, p, 1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_per_group() {
        let c = confusion_by_group(&[true, false], &[true, false], &[Group::A, Group::B]).unwrap();
        assert_eq!(c.men, Confusion { tp: 1, ..Default::default() });
        assert_eq!(c.women, Confusion { tn: 1, ..Default::default() });
    }

    #[test]
    fn all_correct_has_no_errors() {
        let y = [true, false, true, true, false];
        let g = [Group::A, Group::B, Group::B, Group::A, Group::A];
        let c = confusion_by_group(&y, &y, &g).unwrap();
        for conf in [c.men, c.women] {
            assert_eq!(conf.fp + conf.fn_, 0);
        }
        assert_eq!(c.men.total() + c.women.total(), 5);
    }

    #[test]
    fn length_mismatch() {
        assert!(confusion_by_group(&[true], &[true, false], &[Group::A]).is_err());
        assert!(confusion_by_group(&[true], &[true], &[]).is_err());
    }
}
