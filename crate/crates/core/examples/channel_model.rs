//! Link rates and per-user delay breakdown as a user moves away from the
//! base station.
//!
//! cargo run --release --example channel_model

use genai_edge::env_model::{self, GenAiModelSpec, RadioConfig, MEGABYTE_BITS};

fn main() {
    let radio = RadioConfig::default();
    let spec = GenAiModelSpec::reference(6.0, 8.0 * MEGABYTE_BITS);
    let d_in = 7.5 * MEGABYTE_BITS;
    let (alpha, steps, share) = (0.7, 1000.0, 0.2);

    println!("{:>8} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9}", "dist_m", "gain_db", "up_Mbps", "dw_Mbps", "hit_s", "miss_s", "hit_U");
    for d in [1.0, 10.0, 50.0, 100.0, 150.0, 175.0] {
        let h = env_model::channel_gain(env_model::path_loss_db(d, 1.0), 1.0);
        let up = env_model::uplink_rate(share, &radio, 23.0, h);
        let dw = env_model::downlink_rate(&radio, h);
        let delay = |cached: bool| {
            env_model::uplink_delay(d_in, up, cached, radio.backhaul_up_bps, f64::INFINITY)
                + env_model::downlink_delay(spec.output_bits, dw, cached, radio.backhaul_down_bps, f64::INFINITY)
                + env_model::generation_delay(share, steps, &spec, cached)
        };
        let quality = env_model::generation_quality(share, steps, &spec, true);
        println!(
            "{d:>8.0} {:>10.1} {:>10.1} {:>10.1} {:>9.2} {:>9.2} {:>9.2}",
            env_model::linear_to_db(h),
            up / 1e6,
            dw / 1e6,
            delay(true),
            delay(false),
            env_model::utility(alpha, delay(true), quality)
        );
    }
}
