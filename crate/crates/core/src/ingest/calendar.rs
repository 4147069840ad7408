//! Proleptic-Gregorian UTC calendar fields from Unix milliseconds.

const MS_PER_DAY: i64 = 86_400_000;

/// Calendar fields of a UTC instant. `weekday` counts from Monday = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CivilDate {
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub weekday: u32,
}

/// Days since 1970-01-01 to (year, month, day).
///
/// Era-based conversion: 400-year eras of 146097 days, years starting in March
/// so the leap day falls at the end.
pub fn civil_from_days(days: i64) -> (i32, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if m <= 2 { y + 1 } else { y };
    (y as i32, m as u32, d as u32)
}

/// Inverse of [`civil_from_days`].
pub fn days_from_civil(year: i32, month: u32, day: u32) -> i64 {
    let y = i64::from(year) - i64::from(month <= 2);
    let era = y.div_euclid(400);
    let yoe = y.rem_euclid(400);
    let m = i64::from(month);
    let mp = if m > 2 { m - 3 } else { m + 9 };
    let doy = (153 * mp + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

pub fn civil_from_millis(ms: i64) -> CivilDate {
    let days = ms.div_euclid(MS_PER_DAY);
    let (year, month, day) = civil_from_days(days);
    // 1970-01-01 was a Thursday
    let weekday = (days + 3).rem_euclid(7) as u32;
    CivilDate {
        year,
        month,
        day,
        weekday,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_is_thursday() {
        assert_eq!(
            civil_from_millis(0),
            CivilDate {
                year: 1970,
                month: 1,
                day: 1,
                weekday: 3
            }
        );
    }

    #[test]
    fn leap_day() {
        let days = days_from_civil(2020, 2, 29);
        assert_eq!(civil_from_days(days), (2020, 2, 29));
        assert_eq!(civil_from_days(days + 1), (2020, 3, 1));
    }

    #[test]
    fn last_millisecond_of_day_stays_on_day() {
        let d = civil_from_millis(MS_PER_DAY - 1);
        assert_eq!((d.year, d.month, d.day), (1970, 1, 1));
    }
}
