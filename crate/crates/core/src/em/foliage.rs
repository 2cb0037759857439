use crate::num::Real;
use crate::scene::FoliageModel;

/// Depth beyond which the Weissberger law is not defined, meters.
pub const WEISSBERGER_MAX_DEPTH: f64 = 400.0;

/// Vegetation loss in dB over penetration depth `depth_m`. `alpha_db_per_m`
/// is used by the generic model only.
pub fn foliage_loss<T: Real>(model: FoliageModel, frequency_hz: T, depth_m: T, alpha_db_per_m: T) -> T {
    let d = depth_m.max(T::zero());
    match model {
        FoliageModel::Generic => alpha_db_per_m * d,
        FoliageModel::Weissberger => {
            let f = (frequency_hz / T::of(1e9)).powf(T::of(0.284));
            let max = T::of(WEISSBERGER_MAX_DEPTH);
            let d = if d > max {
                log::warn!("foliage depth {d} m beyond the Weissberger range; clamped to 400 m");
                max
            } else {
                d
            };
            if d <= T::of(14.0) {
                T::of(0.45) * f * d
            } else {
                T::of(1.33) * f * d.powf(T::of(0.588))
            }
        }
    }
}
