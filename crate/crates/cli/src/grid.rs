//! Flag value syntax: comma lists and `start:stop:step` grids.

use std::str::FromStr;

use ustat_core::harness::geometric_grid;

/// Comma-separated list; empty items are rejected.
pub fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, String> {
    raw.split(',')
        .map(|item| {
            let item = item.trim();
            item.parse()
                .map_err(|_| format!("invalid {what} `{item}` in `{raw}`"))
        })
        .collect()
}

/// `start:stop:step` over integers, or a single value / comma list. The stop
/// value is included when it lies on the grid.
pub fn parse_int_grid(raw: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list(raw, "integer"),
        [start, stop, step] => {
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("invalid integer `{s}` in grid `{raw}`"))
            };
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step == 0 || stop < start {
                return Err(format!("grid `{raw}` needs step > 0 and start <= stop"));
            }
            Ok((start..=stop).step_by(step).collect())
        }
        _ => Err(format!("grid `{raw}` must be `start:stop:step`")),
    }
}

/// `lo:hi:geometric` (7 points per decade, rounded), `start:stop:step`, or a
/// comma list of reals.
pub fn parse_real_grid(raw: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("invalid number `{s}` in grid `{raw}`"))
    };
    match parts.as_slice() {
        [_] => {
            let v: Vec<f64> = parse_list(raw, "number")?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("non-finite value in `{raw}`"));
            }
            Ok(v)
        }
        [lo, hi, "geometric"] => geometric_grid(num(lo)?, num(hi)?).map_err(|e| e.to_string()),
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("grid `{raw}` needs step > 0 and start <= stop"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| start + step * i as f64).collect())
        }
        _ => Err(format!("grid `{raw}` must be `lo:hi:geometric` or `start:stop:step`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_grids() {
        assert_eq!(parse_int_grid("50:400:50").unwrap(), vec![50, 100, 150, 200, 250, 300, 350, 400]);
        assert_eq!(parse_int_grid("50:50:50").unwrap(), vec![50]);
        assert_eq!(parse_int_grid("10:25:10").unwrap(), vec![10, 20]);
        assert_eq!(parse_int_grid("30,60").unwrap(), vec![30, 60]);
        for bad in ["50:400", "a:b:c", "50:10:5", "1:5:0", "", "5:6:7:8"] {
            assert!(parse_int_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn real_grids() {
        let g = parse_real_grid("1:64:geometric").unwrap();
        assert_eq!(g.len(), 14);
        assert_eq!(parse_real_grid("0.5:2:0.5").unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_real_grid("1.5,4.1").unwrap(), vec![1.5, 4.1]);
        for bad in ["0:64:geometric", "1:x:geometric", "1:2:log", "inf", "1:2"] {
            assert!(parse_real_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<String>("a, b", "x").unwrap(), vec!["a", "b"]);
        assert!(parse_list::<f64>("1.5,,2", "nu").is_err());
    }
}
