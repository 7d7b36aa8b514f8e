use super::{Atom, GeometryError, MolecularGeometry};

/// Parses a standard XYZ file: atom count, comment line, then `El x y z` rows.
pub fn parse_xyz(text: &str) -> Result<MolecularGeometry, GeometryError> {
    let mut lines = text.lines().enumerate();
    let (_, count) = lines.next().ok_or(GeometryError::Xyz {
        line: 1,
        msg: "missing atom count".into(),
    })?;
    let n: usize = count.trim().parse().map_err(|_| GeometryError::Xyz {
        line: 1,
        msg: format!("bad atom count `{}`", count.trim()),
    })?;
    lines.next();
    let mut atoms = Vec::with_capacity(n);
    for (idx, line) in lines {
        if atoms.len() == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(GeometryError::Xyz {
                line: idx + 1,
                msg: "more atoms than declared".into(),
            });
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(GeometryError::Xyz {
                line: idx + 1,
                msg: "expected `element x y z`".into(),
            });
        }
        let mut pos = [0.0; 3];
        for (p, f) in pos.iter_mut().zip(&fields[1..4]) {
            *p = f.parse().map_err(|_| GeometryError::Xyz {
                line: idx + 1,
                msg: format!("bad coordinate `{f}`"),
            })?;
        }
        atoms.push(Atom::new(fields[0], pos));
    }
    if atoms.len() != n {
        return Err(GeometryError::Xyz {
            line: text.lines().count(),
            msg: format!("declared {n} atoms, found {}", atoms.len()),
        });
    }
    MolecularGeometry::new(atoms)
}

pub fn write_xyz(geom: &MolecularGeometry, comment: &str) -> String {
    let mut out = format!("{}\n{}\n", geom.len(), comment.replace('\n', " "));
    for a in geom.atoms() {
        let [x, y, z] = a.position;
        out.push_str(&format!("{} {x:.12} {y:.12} {z:.12}\n", a.element));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = MolecularGeometry::new(vec![
            Atom::new("Li", [0.0, 0.0, 0.0]),
            Atom::new("H", [0.0, 0.0, 1.5949]),
        ])
        .unwrap();
        let back = parse_xyz(&write_xyz(&g, "LiH")).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            parse_xyz("x\n"),
            Err(GeometryError::Xyz { line: 1, .. })
        ));
        assert!(matches!(
            parse_xyz("2\nc\nH 0 0 0\nH 0 0 q\n"),
            Err(GeometryError::Xyz { line: 4, .. })
        ));
        assert!(parse_xyz("3\nc\nH 0 0 0\n").is_err());
    }
}
