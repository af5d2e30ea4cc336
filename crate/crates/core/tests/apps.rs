use aspot_core::apps::synthetic::{gradient_image, registration_case};
use aspot_core::apps::{
    color_transfer, kmeans_quantize, read_ppm, read_xyz, recolor_pixels, register_point_clouds, write_ppm, write_xyz,
    PixelImage, RegistrationConfig,
};
use aspot_core::{SolverConfig, SolverKind};
use ndarray::Array2;

fn mean_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).mapv(f64::abs).mean().unwrap()
}

#[test]
fn identical_images_recolor_to_themselves() {
    let img = gradient_image(24, 24, [[0.9, 0.1, 0.1], [0.1, 0.9, 0.1], [0.1, 0.1, 0.9], [0.9, 0.9, 0.2]], 5);
    let hist = kmeans_quantize(&img.pixels, 12, 5).unwrap();
    let quantized = recolor_pixels(&hist, &hist.centroids);
    let quantization_error = mean_abs(&quantized, &img.pixels);

    let config = SolverConfig::with_epsilon(0.01);
    let out = color_transfer(&hist, &hist, 1.0, SolverKind::Aspot, &config).unwrap();
    let recolored = recolor_pixels(&hist, &out.recolored);
    let err = mean_abs(&recolored, &img.pixels);
    assert!(err <= quantization_error + 0.02, "{err} vs quantization {quantization_error}");
}

#[test]
fn image_and_cloud_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = gradient_image(7, 5, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 1);
    let path = dir.path().join("g.ppm");
    write_ppm(&path, &img).unwrap();
    let back: PixelImage = read_ppm(&path).unwrap();
    assert_eq!((back.width, back.height), (7, 5));
    // 8-bit quantization.
    assert!(mean_abs(&back.pixels, &img.pixels) <= 0.5 / 255.0 + 1e-12);

    let case = registration_case(20, 0.5, 10.0, 1);
    let cloud = dir.path().join("p.xyz");
    write_xyz(&cloud, &case.p).unwrap();
    let p = read_xyz(&cloud).unwrap();
    assert!(mean_abs(&p, &case.p) < 1e-12);
}

#[test]
fn registration_recovers_a_small_rotation() {
    let case = registration_case(80, 0.8, 10.0, 3);
    let result = register_point_clouds(&case.p, &case.q, &RegistrationConfig::default(), SolverKind::Aspot).unwrap();
    let expected = case.truth.inverse();
    assert!(result.transform.angle_to(&expected) < 5.0);
    let accumulated: Vec<usize> = result.records.iter().map(|r| r.accumulated_iterations).collect();
    assert!(accumulated.windows(2).all(|w| w[0] <= w[1]));
}
