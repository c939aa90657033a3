use mpsim::harness;
use mpsim::RunOptions;

fn main() {
    let name = std::env::args().nth(1).unwrap_or("table2-bej-haw".into());
    let pin = std::env::args().nth(2).and_then(|s| s.parse().ok());
    let cfg = harness::load_scenario(&name).unwrap();
    let res = mpsim::run_scenario(&cfg, &RunOptions { pin_path: pin, ..Default::default() }).unwrap();
    let f = &res.flows[0];
    println!("goodput {:.2} Mb/s retx {} timeouts {} drops {}", f.goodput_bps/1e6, f.retransmits, f.timeouts, f.drops);
    for r in res.metrics.iter().filter(|r| r.flow.0 == 0).take(15) {
        println!("t={:>4.0} goodput={:>6.2} cwnd={:>8.0} drops={}", r.time_s, r.goodput_bps/1e6, r.cwnd_bytes.unwrap_or(0.0), r.drops);
    }
}
