# Expression language, manifolds, curvature oracle, closed forms and soliton residuals
