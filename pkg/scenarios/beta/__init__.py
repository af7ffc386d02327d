# Beta-distribution benchmark
