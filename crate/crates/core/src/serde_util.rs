//! Serde adapters storing big integers as decimal strings. State files never
//! contain native JSON numbers for construction data: the integers outgrow
//! every fixed-width type almost immediately, and decimal strings survive any
//! JSON tooling unchanged.

pub mod biguint_string {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(|_| D::Error::custom("bad unsigned integer"))
    }
}

pub mod bigint_string {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(|_| D::Error::custom("bad integer"))
    }
}

pub mod biguint_string_opt {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|x| x.parse().map_err(|_| D::Error::custom("bad unsigned integer")))
            .transpose()
    }
}

pub mod biguint_string_vec {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|x| x.parse().map_err(|_| D::Error::custom("bad unsigned integer")))
            .collect()
    }
}

pub mod bigint_pair_string {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &(BigInt, BigInt), s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([v.0.to_string(), v.1.to_string()])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(BigInt, BigInt), D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        if raw.len() != 2 {
            return Err(D::Error::custom("expected a pair"));
        }
        let a = raw[0].parse().map_err(|_| D::Error::custom("bad integer"))?;
        let b = raw[1].parse().map_err(|_| D::Error::custom("bad integer"))?;
        Ok((a, b))
    }
}

pub mod shell_table {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    type Pair = (i64, i64);

    /// Shells as `[[ [i, j], "prime" ], ...]`: pairs stay integer arrays,
    /// primes travel as decimal strings.
    pub fn serialize<S: Serializer>(v: &[Vec<(Pair, u64)>], s: S) -> Result<S::Ok, S::Error> {
        let as_strings: Vec<Vec<(Pair, String)>> = v
            .iter()
            .map(|shell| shell.iter().map(|&(p, prime)| (p, prime.to_string())).collect())
            .collect();
        serde::Serialize::serialize(&as_strings, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<(Pair, u64)>>, D::Error> {
        let raw: Vec<Vec<(Pair, String)>> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|shell| {
                shell
                    .into_iter()
                    .map(|(p, prime)| {
                        prime
                            .parse::<u64>()
                            .map(|x| (p, x))
                            .map_err(|_| D::Error::custom("bad prime"))
                    })
                    .collect()
            })
            .collect()
    }
}

pub mod rational_string {
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::interval::{rational_from_str, rational_to_string};

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let raw = String::deserialize(d)?;
        rational_from_str(&raw).ok_or_else(|| D::Error::custom("bad rational"))
    }
}
