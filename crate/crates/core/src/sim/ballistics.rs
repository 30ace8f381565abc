//! Drag-free point-mass flight to the ground plane `z = 0`.

/// Touchdown point and time of flight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landing {
    pub point: [f64; 2],
    pub time: f64,
}

/// Solves `p0.z + v0.z·t − g·t²/2 = 0` for the first non-negative root.
///
/// Returns `None` when the ball never reaches the plane (only possible with
/// `g <= 0`) or when the start lies below it.
pub fn ballistic_landing(p0: [f64; 3], v0: [f64; 3], gravity: f64) -> Option<Landing> {
    let (z, vz) = (p0[2], v0[2]);
    if !(z >= 0.0) || !p0.iter().chain(&v0).all(|v| v.is_finite()) {
        return None;
    }
    let t = if z == 0.0 && vz <= 0.0 {
        0.0
    } else if gravity > 0.0 {
        // 0.5·g·t² − vz·t − z = 0, positive root; the stable form avoids
        // cancellation when vz is large and positive.
        let disc = vz * vz + 2.0 * gravity * z;
        let s = disc.sqrt();
        if vz >= 0.0 {
            (vz + s) / gravity
        } else {
            2.0 * z / (s - vz)
        }
    } else if vz < 0.0 {
        -z / vz
    } else {
        return None;
    };
    Some(Landing {
        point: [p0[0] + v0[0] * t, p0[1] + v0[1] * t],
        time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_flight_time_oracle() {
        let l = ballistic_landing([1.0, 0.0, 1.0], [2.0, 0.0, 1.0], 9.81).unwrap();
        // Positive root of 1 + t − 4.905 t² by the textbook formula.
        let a = -4.905f64;
        let t_star = (-1.0 - (1.0f64 - 4.0 * a * 1.0).sqrt()) / (2.0 * a);
        assert!((l.time - t_star).abs() < 1e-12);
        assert!((l.time - 0.5648).abs() < 1e-4);
        assert!((l.point[0] - 2.1296).abs() < 1e-4);
        assert_eq!(l.point[1], 0.0);
    }

    #[test]
    fn free_fall() {
        let h = 1.3;
        let l = ballistic_landing([0.0, 0.0, h], [0.0; 3], 9.81).unwrap();
        assert_eq!(l.point, [0.0, 0.0]);
        assert!((l.time - (2.0 * h / 9.81f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn already_on_plane() {
        let l = ballistic_landing([0.4, -0.2, 0.0], [1.0, 1.0, -0.5], 9.81).unwrap();
        assert_eq!(l.time, 0.0);
        assert_eq!(l.point, [0.4, -0.2]);
    }

    #[test]
    fn no_landing_without_gravity_going_up() {
        assert!(ballistic_landing([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0.0).is_none());
        assert!(ballistic_landing([0.0, 0.0, -1.0], [0.0, 0.0, 1.0], 9.81).is_none());
    }
}
