mod common;

const HEAVY: u32 = 10_000;

macro_rules! suite {
    ($name:ident) => {
        #[test]
        fn $name() {
            if let Err(e) = common::$name(HEAVY, false) {
                panic!("{e}");
            }
        }
    };
}

suite!(logistic_smooth);
suite!(logistic_near_optimal);
suite!(snap_quality);
suite!(best_response_intervals_1d);
suite!(best_response_convex_2d);
suite!(swap_regret_brute_force);
suite!(nearest_point);
suite!(interval_count);
suite!(weighted_bucket_bias);
