// SPDX-License-Identifier: Apache-2.0

mod common;

use aaipc::float::mitchell_delta;
use aaipc::{CustomFloat, FloatConfig, Rounding};
use common::round_rational;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

/// Exact value from the fields, independent of `decode` and the `f64` range.
fn value_rational(cfg: &FloatConfig, v: &CustomFloat) -> BigRational {
    if v.is_zero {
        return BigRational::from_integer(0.into());
    }
    let sig = BigRational::from_integer(((1u64 << cfg.man_bits) + v.man).into());
    let shift = v.exp as i64 - cfg.man_bits as i64;
    let pow = BigRational::from_integer(BigInt::from(1) << shift.unsigned_abs());
    if shift >= 0 {
        sig * pow
    } else {
        sig / pow
    }
}

fn rational_oracle_matches(cfg: &FloatConfig, exact: BigRational, got: &CustomFloat) {
    let (e, m) = round_rational(&exact, cfg.man_bits, cfg.rounding);
    assert!(!got.is_zero);
    assert_eq!((got.exp as i64, got.man), (e, m));
}

#[test]
fn one_third_squared_matches_wide_oracle() {
    for rounding in [Rounding::NearestEven, Rounding::TowardZero] {
        let cfg = FloatConfig::new(5, 10).unwrap().with_rounding(rounding);
        let third = cfg.encode(1.0 / 3.0).unwrap().value;
        let q = value_rational(&cfg, &third);
        let r = cfg.exact_mul(&third, &third);
        assert!(!r.underflowed && !r.overflowed);
        rational_oracle_matches(&cfg, &q * &q, &r.value);
    }
}

#[test]
fn one_third_sum_matches_wide_oracle() {
    let cfg = FloatConfig::new(5, 10).unwrap();
    let third = cfg.encode(1.0 / 3.0).unwrap().value;
    let q = value_rational(&cfg, &third);
    let r = cfg.exact_add(&third, &third);
    rational_oracle_matches(&cfg, &q + &q, &r.value);
    assert_eq!(cfg.decode(&r.value), 1365.0 / 2048.0);
}

#[test]
fn decode_of_one_third() {
    let cfg = FloatConfig::new(5, 10).unwrap();
    let v = cfg.encode(1.0 / 3.0).unwrap().value;
    assert_eq!(cfg.decode(&v), 0.333251953125);
}

#[test]
fn below_range_flushes() {
    let cfg = FloatConfig::new(5, 10).unwrap();
    let r = cfg.encode(2f64.powi(-cfg.bias - 1)).unwrap();
    assert!(r.value.is_zero && r.underflowed);
}

/// Every mantissa pair at `M = 8` with both exponents zero.
#[test]
fn exhaustive_aai_grid_at_m8() {
    let cfg = FloatConfig::new(8, 8).unwrap();
    let scale = 256.0;
    let mut worst = (0.0f64, 0u64, 0u64);
    for ma in 0..256u64 {
        for mb in 0..256u64 {
            let a = CustomFloat {
                is_zero: false,
                exp: 0,
                man: ma,
            };
            let b = CustomFloat {
                is_zero: false,
                exp: 0,
                man: mb,
            };
            let exact = (1.0 + ma as f64 / scale) * (1.0 + mb as f64 / scale);
            let sum = (ma + mb) as f64 / scale;
            let oracle = if sum >= 1.0 { 2.0 * sum } else { 1.0 + sum };
            let got = cfg.decode(&cfg.aai_mul(&a, &b).value);
            assert_eq!(got, oracle);
            let rel = 1.0 - got / exact;
            assert!(rel >= 0.0);
            if rel > worst.0 {
                worst = (rel, ma, mb);
            }
        }
    }
    assert_eq!((worst.1, worst.2), (128, 128));
    assert!((worst.0 - 1.0 / 9.0).abs() < 1e-15);
}

#[test]
fn mitchell_peak_by_grid_search() {
    let n = 1_000_000;
    let (mut best, mut arg) = (0.0, 0.0);
    for i in 0..=n {
        let f = i as f64 / n as f64;
        let d = mitchell_delta(f).unwrap();
        assert!((0.0..=0.0861).contains(&d));
        if d > best {
            best = d;
            arg = f;
        }
    }
    let stationary = 1.0 / std::f64::consts::LN_2 - 1.0;
    assert!((arg - stationary).abs() < 2e-6);
    assert!((best - mitchell_delta(stationary).unwrap()).abs() < 1e-12);
    assert!((best - 0.08607).abs() < 1e-5);
    assert_eq!(mitchell_delta(0.0).unwrap(), 0.0);
    assert_eq!(mitchell_delta(1.0).unwrap(), 0.0);
}

#[test]
fn bit_pattern_identities() {
    let cfg = FloatConfig::new(8, 12).unwrap();
    let one = cfg.to_bits(&cfg.encode(1.0).unwrap().value);
    assert_eq!(cfg.aai_mul_bits(one, one).unwrap(), one);
    let half = cfg.to_bits(&cfg.encode(0.5).unwrap().value);
    let quarter = cfg.to_bits(&cfg.encode(0.25).unwrap().value);
    assert_eq!(cfg.aai_mul_bits(half, half).unwrap(), quarter);
    assert!(cfg.aai_mul_bits(0, one).is_err());
}

fn config() -> impl Strategy<Value = FloatConfig> {
    (2u32..=11, 0u32..=20, any::<bool>()).prop_map(|(e, m, tz)| {
        let r = if tz {
            Rounding::TowardZero
        } else {
            Rounding::NearestEven
        };
        FloatConfig::new(e, m).unwrap().with_rounding(r)
    })
}

fn value(cfg: FloatConfig) -> impl Strategy<Value = CustomFloat> {
    let (lo, hi) = (cfg.min_exp(), cfg.max_exp());
    let mask = (1u64 << cfg.man_bits) - 1;
    (lo..=hi, any::<u64>()).prop_map(move |(exp, m)| CustomFloat {
        is_zero: false,
        exp,
        man: m & mask,
    })
}

fn config_and_pair() -> impl Strategy<Value = (FloatConfig, CustomFloat, CustomFloat)> {
    config().prop_flat_map(|cfg| (Just(cfg), value(cfg), value(cfg)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn aai_never_exceeds_exact_product((cfg, a, b) in config_and_pair()) {
        let r = cfg.aai_mul(&a, &b);
        prop_assume!(!r.underflowed && !r.overflowed);
        let exact = value_rational(&cfg, &a) * value_rational(&cfg, &b);
        let got = value_rational(&cfg, &r.value);
        prop_assert!(got <= exact);
        let equal = a.man == 0 || b.man == 0;
        prop_assert_eq!(got == exact, equal);
        let rel = ((&exact - &got) / &exact).to_f64().unwrap();
        prop_assert!(rel <= 1.0 / 9.0 + 2f64.powi(-(cfg.man_bits as i32)));
    }

    #[test]
    fn exact_mul_rounds_once((cfg, a, b) in config_and_pair()) {
        let r = cfg.exact_mul(&a, &b);
        prop_assume!(!r.underflowed && !r.overflowed);
        let exact = value_rational(&cfg, &a) * value_rational(&cfg, &b);
        rational_oracle_matches(&cfg, exact, &r.value);
    }

    #[test]
    fn exact_add_rounds_once((cfg, a, b) in config_and_pair()) {
        let r = cfg.exact_add(&a, &b);
        prop_assume!(!r.overflowed);
        let exact = value_rational(&cfg, &a) + value_rational(&cfg, &b);
        rational_oracle_matches(&cfg, exact, &r.value);
    }

    #[test]
    fn bits_path_equals_semantic_path((cfg, a, b) in config_and_pair()) {
        let bits = cfg.aai_mul_bits(cfg.to_bits(&a), cfg.to_bits(&b)).unwrap();
        prop_assert_eq!(bits, cfg.to_bits(&cfg.aai_mul(&a, &b).value));
    }

    #[test]
    fn round_trip_within_half_ulp(e in 2u32..=11, m in 0u32..=52, u in 0.0f64..1.0, f in 1.0f64..2.0) {
        prop_assume!(e + m <= 63);
        let cfg = FloatConfig::new(e, m).unwrap();
        let (lo, hi) = (cfg.min_exp().max(-1022), cfg.max_exp().min(1022));
        let k = lo + ((hi - lo) as f64 * u) as i32;
        let x = f * 2f64.powi(k);
        let r = cfg.encode(x).unwrap();
        prop_assert!(!r.underflowed);
        prop_assume!(!r.overflowed);
        let back = cfg.decode(&r.value);
        let bound = 2f64.powi(-(m as i32 + 1));
        prop_assert!(((back - x) / x).abs() <= bound * (1.0 + 1e-15));
    }

    #[test]
    fn toward_zero_never_rounds_up((cfg, a, b) in config_and_pair()) {
        let cfg = cfg.with_rounding(Rounding::TowardZero);
        let exact = value_rational(&cfg, &a) * value_rational(&cfg, &b);
        let r = cfg.exact_mul(&a, &b);
        prop_assume!(!r.overflowed);
        prop_assert!(value_rational(&cfg, &r.value) <= exact);
        let s = cfg.exact_add(&a, &b);
        prop_assume!(!s.overflowed);
        prop_assert!(value_rational(&cfg, &s.value) <= value_rational(&cfg, &a) + value_rational(&cfg, &b));
    }
}

/// Relative AAI error over every mantissa pair for each `M <= 10`.
#[test]
fn exhaustive_relative_error_bound_small_m() {
    for m in 0..=10u32 {
        let cfg = FloatConfig::new(8, m).unwrap();
        let n = 1u64 << m;
        let mut max_rel: f64 = 0.0;
        for ma in 0..n {
            for mb in 0..n {
                let a = CustomFloat {
                    is_zero: false,
                    exp: -3,
                    man: ma,
                };
                let b = CustomFloat {
                    is_zero: false,
                    exp: 1,
                    man: mb,
                };
                let exact = cfg.decode(&a) * cfg.decode(&b);
                let got = cfg.decode(&cfg.aai_mul(&a, &b).value);
                let rel = (exact - got) / exact;
                assert!(rel >= 0.0);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel <= 1.0 / 9.0 + 2f64.powi(-(m as i32)));
        if m >= 1 {
            assert!((max_rel - 1.0 / 9.0).abs() < 1e-15, "M={m}: {max_rel}");
        }
    }
}
