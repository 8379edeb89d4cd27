//! Bundled word lists for fictitious PHI. Common surnames and given names,
//! generic street and place words, and made-up institution parts; none come
//! from patient records.

pub const LAST_NAMES: &[&str] = &[
    "SMITH", "JOHNSON", "WILLIAMS", "BROWN", "JONES", "GARCIA", "MILLER", "DAVIS", "RODRIGUEZ", "MARTINEZ",
    "HERNANDEZ", "LOPEZ", "GONZALEZ", "WILSON", "ANDERSON", "THOMAS", "TAYLOR", "MOORE", "JACKSON", "MARTIN",
    "LEE", "PEREZ", "THOMPSON", "WHITE", "HARRIS", "SANCHEZ", "CLARK", "RAMIREZ", "LEWIS", "ROBINSON",
    "WALKER", "YOUNG", "ALLEN", "KING", "WRIGHT", "SCOTT", "TORRES", "NGUYEN", "HILL", "FLORES",
    "GREEN", "ADAMS", "NELSON", "BAKER", "HALL", "RIVERA", "CAMPBELL", "MITCHELL", "CARTER", "ROBERTS",
    "O'BRIEN", "KOWALSKI", "CHEN", "PATEL", "KIM", "SINGH", "MULLER", "ROSSI", "SATO", "OKAFOR",
];

pub const FIRST_NAMES: &[&str] = &[
    "JAMES", "MARY", "ROBERT", "PATRICIA", "JOHN", "JENNIFER", "MICHAEL", "LINDA", "DAVID", "ELIZABETH",
    "WILLIAM", "BARBARA", "RICHARD", "SUSAN", "JOSEPH", "JESSICA", "THOMAS", "SARAH", "CHARLES", "KAREN",
    "DANIEL", "NANCY", "MATTHEW", "LISA", "ANTHONY", "BETTY", "MARK", "MARGARET", "DONALD", "SANDRA",
    "PAUL", "ASHLEY", "STEVEN", "EMILY", "ANDREW", "DONNA", "KENNETH", "MICHELLE", "JOSHUA", "CAROL",
    "ANA", "WEI", "PRIYA", "OMAR", "YUKI", "AMARA", "LUCA", "INES", "RAJ", "ELENA",
];

pub const STREET_NAMES: &[&str] = &[
    "MAPLE", "OAK", "PINE", "CEDAR", "ELM", "WASHINGTON", "LAKE", "HILL", "PARK", "MAIN",
    "CHURCH", "HIGHLAND", "RIVER", "SUNSET", "FOREST", "MEADOW", "SPRING", "WILLOW", "BIRCH", "LINCOLN",
];

pub const STREET_SUFFIXES: &[&str] = &["ST", "AVE", "RD", "BLVD", "LN", "DR", "CT", "WAY", "PL"];

pub const CITIES: &[&str] = &[
    "SPRINGFIELD", "FAIRVIEW", "RIVERSIDE", "GREENVILLE", "MADISON", "CLINTON", "FRANKLIN", "GEORGETOWN",
    "ARLINGTON", "SALEM", "BRISTOL", "DOVER",
];

pub const STATES: &[&str] = &["CA", "TX", "NY", "FL", "OH", "PA", "IL", "GA", "NC", "MI", "WA", "AZ"];

pub const INSTITUTION_PREFIXES: &[&str] = &[
    "NORTHFIELD", "ST. BRIDGET'S", "LAKESHORE", "MERCY VALE", "PINECREST", "EASTBROOK", "HARBORVIEW",
    "SUMMIT", "WESTGATE", "SILVER OAK", "RIVERBEND", "BLUE RIDGE",
];

pub const INSTITUTION_TYPES: &[&str] = &[
    "GENERAL HOSPITAL",
    "MEDICAL CENTER",
    "IMAGING",
    "CLINIC",
    "HEALTH",
    "RADIOLOGY",
    "CHILDREN'S",
    "UNIV. HOSP.",
];

pub const SEQUENCE_LABELS: &[&str] = &[
    "T1 AX", "T2 AX", "T2 FLAIR", "T1 POST", "DWI B1000", "ADC", "SAG T2", "COR STIR", "SWI", "PD FS",
    "PA CHEST", "AP PORTABLE", "LAT", "AXIAL 5MM", "CTA HEAD", "SE:3 IM:45", "SE:2 IM:17", "W:400 L:40",
    "W:1500 L:-600", "L-SPINE", "R KNEE", "US ABD", "MIP", "3D TOF",
];
