use cucumis::dataset::generate_fixture;
use cucumis::nn::{build_micro_vgg, Network, NetworkConfig};
use cucumis::survey::{
    mosaic_from_tiles, plan_survey, render_map, run_survey, DiseaseMap, FieldMosaic, SurveyPlan,
    TileOrigin, TileResult, PALETTE, TILE,
};
use cucumis::tensor::Tensor;
use cucumis::{ClassId, Error};
use proptest::prelude::*;

fn network() -> Network<f64> {
    build_micro_vgg(&NetworkConfig::micro_vgg16(17)).unwrap()
}

fn fixture_mosaic(n: usize) -> (FieldMosaic<f64>, Vec<Tensor<f64>>) {
    let fx = generate_fixture(2, 8);
    let tiles: Vec<_> = (0..n * n)
        .map(|k| fx.images[k % fx.images.len()].clone())
        .collect();
    let image = mosaic_from_tiles(&tiles, n, n).unwrap();
    (FieldMosaic::new(image, 0.01).unwrap(), tiles)
}

#[test]
fn plan_examples() {
    let plan = SurveyPlan::new(200, 200, 50).unwrap();
    assert_eq!((plan.rows, plan.cols, plan.origins.len()), (4, 4, 16));
    let row1: Vec<usize> = plan
        .origins
        .iter()
        .filter(|o| o.row == 1)
        .map(|o| o.x)
        .collect();
    assert_eq!(row1, [150, 100, 50, 0]);
    let single = SurveyPlan::new(50, 50, 50).unwrap();
    assert_eq!(
        single.origins,
        [TileOrigin {
            row: 0,
            col: 0,
            y: 0,
            x: 0
        }]
    );
    assert!(matches!(SurveyPlan::new(49, 200, 50), Err(Error::Input(_))));
    assert!(SurveyPlan::new(200, 200, 0).is_err());
    assert!(SurveyPlan::new(200, 200, 51).is_err());
}

proptest! {
    #[test]
    fn plan_covers_grid_once_in_serpentine_order(h in 50usize..260, w in 50usize..260, stride in 1usize..=50) {
        let plan = SurveyPlan::new(h, w, stride).unwrap();
        prop_assert_eq!(plan.rows, (h - TILE) / stride + 1);
        prop_assert_eq!(plan.cols, (w - TILE) / stride + 1);
        prop_assert_eq!(plan.origins.len(), plan.rows * plan.cols);
        let mut seen = vec![false; plan.rows * plan.cols];
        for o in &plan.origins {
            prop_assert!(o.y + TILE <= h && o.x + TILE <= w);
            prop_assert_eq!((o.y, o.x), (o.row * stride, o.col * stride));
            prop_assert!(!std::mem::replace(&mut seen[o.row * plan.cols + o.col], true));
        }
        for pair in plan.origins.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.row == b.row {
                if a.row % 2 == 0 { prop_assert!(b.x > a.x) } else { prop_assert!(b.x < a.x) }
            } else {
                prop_assert_eq!(b.row, a.row + 1);
            }
        }
    }
}

#[test]
fn map_matches_per_tile_predictions() {
    let net = network();
    let (mosaic, tiles) = fixture_mosaic(4);
    let plan = plan_survey(&mosaic, 50).unwrap();
    let map = run_survey(&mosaic, &plan, &net).unwrap();
    assert_eq!(map.tiles.len(), 16);
    for (t, tile) in map.tiles.iter().zip(&tiles) {
        let p = net.predict(tile).unwrap();
        assert_eq!(t.class.index(), p.class);
        assert_eq!(t.confidence, p.confidence);
        assert_eq!(mosaic.tile(t.origin.y, t.origin.x).unwrap(), *tile);
    }
    assert_eq!(map.class_counts().iter().sum::<usize>(), 16);
    assert_eq!(map.covered_pixels(), 200 * 200);
    let fractions = map.area_fractions();
    assert!((fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    for c in ClassId::all() {
        let want = map.class_counts()[c.index()] as f64 / 16.0;
        assert!((fractions[c.index()] - want).abs() <= 1e-12);
    }

    let reversed = run_survey(&mosaic, &plan.reversed(), &net).unwrap();
    assert_eq!(reversed.tiles, map.tiles);

    let (r1, j1) = render_map(&map);
    let (r2, j2) = render_map(&run_survey(&mosaic, &plan, &net).unwrap());
    assert_eq!(r1.encode_ppm(), r2.encode_ppm());
    assert_eq!(j1.to_json(), j2.to_json());
}

#[test]
fn repeated_tile_gives_uniform_map() {
    let net = network();
    let fx = generate_fixture(1, 9);
    let tiles = vec![fx.images[3].clone(); 9];
    let mosaic = FieldMosaic::new(mosaic_from_tiles(&tiles, 3, 3).unwrap(), 0.02).unwrap();
    let map = run_survey(&mosaic, &plan_survey(&mosaic, 50).unwrap(), &net).unwrap();
    assert!(map
        .tiles
        .iter()
        .all(|t| t.class == map.tiles[0].class && t.confidence == map.tiles[0].confidence));
    assert!(map
        .tiles
        .iter()
        .all(|t| (0.0..=1.0).contains(&t.confidence)));
}

#[test]
fn overlapping_tiles_last_written_wins() {
    let net = network();
    let fx = generate_fixture(1, 10);
    let mosaic = FieldMosaic::new(mosaic_from_tiles(&fx.images[..4], 2, 2).unwrap(), 0.01).unwrap();
    let plan = plan_survey(&mosaic, 20).unwrap();
    assert_eq!((plan.rows, plan.cols), (3, 3));
    let map = run_survey(&mosaic, &plan, &net).unwrap();
    let mut want = vec![None; 100 * 100];
    for o in &plan.origins {
        let class = map.tiles[o.row * plan.cols + o.col].class;
        for y in o.y..o.y + TILE {
            for x in o.x..o.x + TILE {
                want[y * 100 + x] = Some(class);
            }
        }
    }
    assert_eq!(map.pixels, want);
}

fn uniform_map(class: ClassId) -> DiseaseMap {
    let plan = SurveyPlan::new(200, 200, 50).unwrap();
    let mut tiles = vec![None; 16];
    for &origin in &plan.origins {
        tiles[origin.row * 4 + origin.col] = Some(TileResult {
            origin,
            class,
            confidence: 1.0,
        });
    }
    DiseaseMap {
        rows: 4,
        cols: 4,
        stride: 50,
        height: 200,
        width: 200,
        tiles: tiles.into_iter().map(Option::unwrap).collect(),
        pixels: vec![Some(class); 200 * 200],
    }
}

#[test]
fn area_fraction_examples() {
    let map = uniform_map(ClassId::FRESH_CUCUMBER);
    let (raster, report) = render_map(&map);
    assert!(raster.pixels.chunks(3).all(|p| p == PALETTE[7]));
    assert_eq!(report.area_fractions[7].fraction, 1.0);
    assert_eq!(report.healthy_fraction, 1.0);

    let mut map = uniform_map(ClassId::FRESH_CUCUMBER);
    map.tiles[5].class = ClassId::ANTHRACNOSE;
    for y in 50..100 {
        for x in 50..100 {
            map.pixels[y * 200 + x] = Some(ClassId::ANTHRACNOSE);
        }
    }
    let report = map.report();
    assert!((report.area_fractions[0].fraction - 1.0 / 16.0).abs() <= 1e-12);
    assert!((report.diseased_fraction - 1.0 / 16.0).abs() <= 1e-12);
    assert_eq!(report.class_counts[0], 1);
    let binary = map.binary_raster();
    assert_ne!(
        binary.pixels[(75 * 200 + 75) * 3..][..3],
        binary.pixels[..3]
    );
}

#[test]
fn survey_input_errors() {
    let net = network();
    let (mosaic, _) = fixture_mosaic(2);
    let wrong = SurveyPlan::new(150, 100, 50).unwrap();
    assert!(matches!(
        run_survey(&mosaic, &wrong, &net),
        Err(Error::Input(_))
    ));
    assert!(FieldMosaic::new(Tensor::<f64>::zeros(&[3, 40, 80]).unwrap(), 0.01).is_err());
    assert!(FieldMosaic::new(Tensor::<f64>::full(&[3, 50, 50], 2.0).unwrap(), 0.01).is_err());
}
