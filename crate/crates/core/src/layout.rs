//! Named tensor-product layouts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which party holds a register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Dice,
    Alice,
    Bob,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
    pub owner: Owner,
}

impl Register {
    pub fn new(name: impl Into<String>, dim: usize, owner: Owner) -> Self {
        Register {
            name: name.into(),
            dim,
            owner,
        }
    }
}

/// Ordered list of registers. The first register is the most significant
/// digit of the flattened (row-major) index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorLayout {
    registers: Vec<Register>,
}

impl TensorLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        if registers.is_empty() {
            return Err(Error::InvalidLayout("no registers".into()));
        }
        for (k, r) in registers.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::InvalidLayout(format!(
                    "register `{}` has dim 0",
                    r.name
                )));
            }
            if registers[..k].iter().any(|o| o.name == r.name) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate register `{}`",
                    r.name
                )));
            }
        }
        if !registers.iter().any(|r| r.owner == Owner::Alice) {
            return Err(Error::InvalidLayout("no alice-owned register".into()));
        }
        if !registers.iter().any(|r| r.owner == Owner::Bob) {
            return Err(Error::InvalidLayout("no bob-owned register".into()));
        }
        Ok(TensorLayout { registers })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].dim)
    }

    pub fn names_owned_by(&self, owner: Owner) -> Vec<&str> {
        self.registers
            .iter()
            .filter(|r| r.owner == owner)
            .map(|r| r.name.as_str())
            .collect()
    }

    pub fn dim_owned_by(&self, owner: Owner) -> usize {
        self.registers
            .iter()
            .filter(|r| r.owner == owner)
            .map(|r| r.dim)
            .product()
    }

    /// Stride of each register in the flattened index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.registers.len()];
        for k in (0..self.registers.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.registers[k + 1].dim;
        }
        strides
    }

    /// Flattened index of a full assignment of register values.
    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.registers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.registers.len(),
                got: digits.len(),
            });
        }
        let mut idx = 0;
        for (r, &d) in self.registers.iter().zip(digits) {
            if d >= r.dim {
                return Err(Error::IndexOutOfRange {
                    what: "register value",
                    index: d,
                    size: r.dim,
                });
            }
            idx = idx * r.dim + d;
        }
        Ok(idx)
    }

    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.registers.len()];
        for k in (0..self.registers.len()).rev() {
            let d = self.registers[k].dim;
            digits[k] = index % d;
            index /= d;
        }
        digits
    }

    /// Resolve a set of register names to sorted layout positions.
    pub fn select(&self, names: &[&str]) -> Result<Vec<usize>> {
        if names.is_empty() {
            return Err(Error::InvalidSelection("empty register set".into()));
        }
        let mut positions = Vec::with_capacity(names.len());
        for name in names {
            let p = self.position(name)?;
            if positions.contains(&p) {
                return Err(Error::InvalidSelection(format!(
                    "register `{name}` listed twice"
                )));
            }
            positions.push(p);
        }
        positions.sort_unstable();
        Ok(positions)
    }

    /// Offsets of every joint value of the registers at `positions`, row-major
    /// in the order given (first position most significant).
    pub fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &p in positions {
            let dim = self.registers[p].dim;
            let mut next = Vec::with_capacity(offsets.len() * dim);
            for &o in &offsets {
                for v in 0..dim {
                    next.push(o + v * strides[p]);
                }
            }
            offsets = next;
        }
        offsets
    }

    /// Split the flattened index space into the selected registers and the
    /// rest: every global index is `selected[a] + rest[t]` for a unique pair
    /// `(a, t)`. The rest is enumerated in layout order.
    pub fn split_offsets(&self, selected: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let rest: Vec<usize> = (0..self.registers.len())
            .filter(|p| !selected.contains(p))
            .collect();
        (self.offsets(selected), self.offsets(&rest))
    }

    /// Layout obtained by appending the registers of `other`.
    pub fn concat(&self, other: &TensorLayout) -> Result<TensorLayout> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        TensorLayout::new(regs)
    }

    /// Registers of one owner, in layout order. Not a valid standalone
    /// layout in general (it lacks the other party), so it is returned raw.
    pub fn registers_of(&self, owner: Owner) -> Vec<Register> {
        self.registers
            .iter()
            .filter(|r| r.owner == owner)
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> TensorLayout {
        TensorLayout::new(vec![
            Register::new("a", 2, Owner::Alice),
            Register::new("b", 3, Owner::Bob),
            Register::new("c", 4, Owner::Bob),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(TensorLayout::new(vec![Register::new("a", 2, Owner::Alice)]).is_err());
        assert!(TensorLayout::new(vec![
            Register::new("a", 2, Owner::Alice),
            Register::new("a", 2, Owner::Bob)
        ])
        .is_err());
        assert!(TensorLayout::new(vec![
            Register::new("a", 0, Owner::Alice),
            Register::new("b", 2, Owner::Bob)
        ])
        .is_err());
    }

    #[test]
    fn index_round_trip() {
        let l = abc();
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.strides(), vec![12, 4, 1]);
        for idx in 0..24 {
            assert_eq!(l.index_of(&l.digits_of(idx)).unwrap(), idx);
        }
        assert_eq!(l.index_of(&[1, 2, 3]).unwrap(), 23);
    }

    #[test]
    fn split_covers_every_index_once() {
        let l = abc();
        let sel = l.select(&["c", "a"]).unwrap();
        assert_eq!(sel, vec![0, 2]);
        let (s, r) = l.split_offsets(&sel);
        assert_eq!(s.len(), 8);
        assert_eq!(r.len(), 3);
        let mut seen = [false; 24];
        for &a in &s {
            for &t in &r {
                assert!(!seen[a + t]);
                seen[a + t] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn selection_errors() {
        let l = abc();
        assert!(matches!(l.select(&[]), Err(Error::InvalidSelection(_))));
        assert!(matches!(l.select(&["z"]), Err(Error::UnknownRegister(_))));
        assert!(matches!(
            l.select(&["a", "a"]),
            Err(Error::InvalidSelection(_))
        ));
    }
}
