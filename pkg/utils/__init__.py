# Utils package: quantile models, Choquet quadrature, closed forms, estimator, sensitivity
