use crate::config::ScheduleRule;
use crate::error::{Error, Result};

/// Per-step reduction counts taking `initial` tokens down to `target`.
///
/// `Halving` removes `floor(R/2)` tokens while at least `2·target` would
/// remain, then removes everything above `target` in one final step.
/// `FixedStep(r)` removes `min(r, R − target)` each step.
pub fn merge_schedule(initial: usize, target: usize, rule: ScheduleRule) -> Result<Vec<usize>> {
    if target == 0 || initial < target {
        return Err(Error::Precondition(format!(
            "cannot schedule {initial} tokens down to {target}"
        )));
    }
    if let ScheduleRule::FixedStep(0) = rule {
        return Err(Error::InvalidConfig("fixed step size must be positive".into()));
    }
    let mut steps = Vec::new();
    let mut remaining = initial;
    while remaining > target {
        let r = match rule {
            ScheduleRule::Halving => {
                let half = remaining / 2;
                if remaining - half >= 2 * target {
                    half
                } else {
                    remaining - target
                }
            }
            ScheduleRule::FixedStep(step) => step.min(remaining - target),
        };
        steps.push(r);
        remaining -= r;
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halving_reference_scale() {
        let s = merge_schedule(2560, 30, ScheduleRule::Halving).unwrap();
        assert_eq!(s, [1280, 640, 320, 160, 80, 50]);
    }

    #[test]
    fn no_steps_at_target() {
        assert!(merge_schedule(30, 30, ScheduleRule::Halving).unwrap().is_empty());
        assert!(merge_schedule(5, 5, ScheduleRule::FixedStep(3)).unwrap().is_empty());
    }

    #[test]
    fn fixed_step() {
        assert_eq!(merge_schedule(20, 6, ScheduleRule::FixedStep(7)).unwrap(), [7, 7]);
        assert_eq!(merge_schedule(20, 5, ScheduleRule::FixedStep(7)).unwrap(), [7, 7, 1]);
    }

    #[test]
    fn rejects_undershoot() {
        assert!(merge_schedule(3, 4, ScheduleRule::Halving).is_err());
        assert!(merge_schedule(3, 0, ScheduleRule::Halving).is_err());
    }

    proptest! {
        #[test]
        fn steps_sum_to_reduction(initial in 1usize..5000, target in 1usize..200, fixed in 1usize..64, halving: bool) {
            prop_assume!(target <= initial);
            let rule = if halving { ScheduleRule::Halving } else { ScheduleRule::FixedStep(fixed) };
            let steps = merge_schedule(initial, target, rule).unwrap();
            prop_assert_eq!(steps.iter().sum::<usize>(), initial - target);
            let mut remaining = initial;
            for r in steps {
                prop_assert!(r >= 1 && r < remaining);
                remaining -= r;
            }
        }
    }
}
