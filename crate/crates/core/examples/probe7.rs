// probe: efficiency of greedy under the printed level-set weight variant
use std::time::Instant;
use targdes::*;

fn main() {
    let grid = Grid::new(50).unwrap();
    let mean = Field::from_fn(grid, |x1, x2| {
        2.0 * (-(((x1 - 1.0).powi(2) + 3.0 * (x2 - 0.5).powi(2)).sqrt()) / 3.0).exp()
    });
    let params = MaternParams::new(0.7, 0.7, 0.2).unwrap();
    let model = MetaModel::new(grid, mean, params).unwrap();
    let cfg = SearchConfig::new(10_000, 40, 42).unwrap();
    for (name, agg) in [("mc_printed", Aggregator::Max), ("ic_printed", Aggregator::Integrated)] {
        let spec = CriterionSpec { weight: WeightSpec::LevelSetPrinted { threshold: 0.85 }, aggregator: agg };
        let t = Instant::now();
        let greedy = greedy_start(&model, &spec, 10).unwrap();
        let report = efficiency(&greedy, &model, &spec, &cfg).unwrap();
        println!("{name}: eff(greedy)={:.4} (C_greedy={:.5e}, C_ref={:.5e}) [{:?}]",
            report.efficiency, report.candidate_value, report.reference_value, t.elapsed());
        println!("    greedy: {:?}", greedy.points());
        println!("    ref:    {:?}", report.reference.points());
    }
}
