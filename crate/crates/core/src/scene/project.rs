//! Local equirectangular projection between WGS84 degrees and scene meters.

use serde::{Deserialize, Serialize};

/// Equatorial radius used by the projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Geographic anchor of the scene-local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoOrigin {
    pub lon: f64,
    pub lat: f64,
}

/// Projects `(lon, lat)` degrees to scene meters east/north of `origin`.
pub fn project_lonlat(lon: f64, lat: f64, origin: GeoOrigin) -> (f64, f64) {
    let x = EARTH_RADIUS_M * origin.lat.to_radians().cos() * (lon - origin.lon).to_radians();
    let y = EARTH_RADIUS_M * (lat - origin.lat).to_radians();
    (x, y)
}

/// Inverse of [`project_lonlat`].
pub fn unproject(x: f64, y: f64, origin: GeoOrigin) -> (f64, f64) {
    let lon = origin.lon + (x / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    let lat = origin.lat + (y / EARTH_RADIUS_M).to_degrees();
    (lon, lat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_maps_to_zero_easting() {
        let o = GeoOrigin {
            lon: 11.97,
            lat: 57.69,
        };
        assert_eq!(project_lonlat(11.97, 57.80, o).0, 0.0);
    }

    #[test]
    fn millidegree_of_latitude() {
        // R * 1e-3 deg in radians.
        let expected = EARTH_RADIUS_M * 1e-3_f64.to_radians();
        assert!((expected - 111.319).abs() < 0.01);
        for lat0 in [-60.0, 0.0, 57.69, 80.0] {
            let o = GeoOrigin { lon: 3.0, lat: lat0 };
            let (_, y) = project_lonlat(3.0, lat0 + 1e-3, o);
            assert!((y - 111.319).abs() < 0.01, "lat0 {lat0}: {y}");
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let o = GeoOrigin {
            lon: 11.9778,
            lat: 57.6889,
        };
        for &(lon, lat) in &[(11.97, 57.68), (11.99, 57.70), (11.9778, 57.6889)] {
            let (x, y) = project_lonlat(lon, lat, o);
            let (lo, la) = unproject(x, y, o);
            assert!((lo - lon).abs() < 1e-9 && (la - lat).abs() < 1e-9);
        }
    }
}
