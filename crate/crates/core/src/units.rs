//! Physical constants and dB/linear helpers.

/// OSNR reference bandwidth, GHz (0.1 nm at 1550 nm).
pub const REF_BANDWIDTH_GHZ: f64 = 12.5;

/// Planck constant, J·s (CODATA 2018, exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_lin(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    lin_to_db(mw)
}

/// Integer key for grouping symbol rates given in GBd (1 kBd resolution).
#[inline]
pub fn rate_key(symbol_rate_gbaud: f64) -> i64 {
    (symbol_rate_gbaud * 1.0e6).round() as i64
}
