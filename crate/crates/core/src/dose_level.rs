//! Serde adapters mapping 0-based dose indices to the 1-based dose levels
//! used in every serialized document (`"dose": 1` is the lowest dose).

use serde::{de::Error, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(index: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(*index as u64 + 1)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    let level = u64::deserialize(d)?;
    if level == 0 {
        return Err(D::Error::custom("dose levels start at 1"));
    }
    Ok(level as usize - 1)
}

pub mod option {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(index: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match index {
            Some(i) => s.serialize_some(&(*i as u64 + 1)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Option::<u64>::deserialize(d)? {
            None => Ok(None),
            Some(0) => Err(D::Error::custom("dose levels start at 1")),
            Some(level) => Ok(Some(level as usize - 1)),
        }
    }
}
