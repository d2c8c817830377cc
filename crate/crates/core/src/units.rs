//! dB and dBm conversions. Everything inside the simulator runs in linear
//! watts; these are the only places decibels are touched.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Thermal noise floor `-170 + 10 log10(BW)` in dBm.
pub fn noise_power_dbm(bandwidth_hz: f64) -> f64 {
    -170.0 + 10.0 * bandwidth_hz.log10()
}

pub fn noise_power_watts(bandwidth_hz: f64) -> f64 {
    dbm_to_watts(noise_power_dbm(bandwidth_hz))
}
