//! Observation sequences used by the worked examples and `rrb reproduce`.

/// 53 draws from an exponential distribution; six upper records.
pub const EXAMPLE_ONE: [f64; 53] = [
    0.06274109, 4.38197283, 5.64659541, 0.08382565, 5.27747401, 2.69666048, 0.98792501, 2.36520919,
    0.04765528, 0.63918881, 0.07107701, 2.19439004, 2.71178500, 1.45946486, 5.31182137, 0.42911833,
    2.74980209, 0.41108542, 2.21423065, 1.31309101, 0.29502675, 1.50707359, 7.26620864, 2.47032883,
    2.79500172, 1.14469466, 3.20462205, 4.10787212, 2.97814895, 2.42587180, 1.85331396, 0.70619791,
    2.60601466, 1.28472926, 0.29126746, 0.07298126, 0.24644642, 1.90989237, 2.40637729, 2.17449704,
    1.02288571, 1.54665282, 2.95083160, 0.95526777, 0.04135414, 1.01268457, 1.07257669, 0.75808989,
    3.33255820, 0.71060492, 1.18752218, 9.41371352, 9.51953091,
];

/// 38 draws from Exp(1); used for the interval tables.
pub const EXAMPLE_TWO: [f64; 38] = [
    0.067773, 0.056655, 0.032254, 2.081551, 0.125478, 2.002154, 1.9874521, 1.254875, 0.236587,
    1.876541, 0.231456, 2.274237, 0.336521, 1.985436, 2.001245, 3.373468, 2.125987, 1.236541,
    0.236541, 1.789654, 3.021543, 2.365987, 1.002154, 0.357951, 2.147963, 3.123623, 2.543659,
    1.598723, 0.001357, 1.986124, 1.963254, 3.847746, 2.356547, 1.235463, 1.4723568, 1.983217,
    3.002541, 4.243143,
];
