use super::{GenFun, GluePart};
use crate::error::{Error, Result};
use crate::expr::ExprSpec;
use crate::genfun::DistributionSpec;
use crate::geometry::Aabb;
use crate::kernels::diffeo::DiffeoSpec;
use crate::kernels::Domain;
use crate::test_function::VectorField;
use serde::{Deserialize, Serialize};

/// Open box `Π (loᵢ, hiᵢ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSpec {
    pub fn build(&self) -> Result<Domain> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::DimensionMismatch { expected: self.lo.len(), got: self.hi.len() });
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Invalid(format!("empty box {:?} .. {:?}", self.lo, self.hi)));
        }
        Domain::open_box(Aabb::new(&self.lo, &self.hi), 6)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub piece: usize,
    pub chi: ExprSpec,
    pub theta: ExprSpec,
}

/// JSON form of a [`GenFun`] tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum GenFunSpec {
    Iota {
        dist: DistributionSpec,
    },
    Sigma {
        #[serde(default = "one")]
        dim: usize,
        f: ExprSpec,
    },
    Sum {
        args: Vec<GenFunSpec>,
    },
    Product {
        args: Vec<GenFunSpec>,
    },
    Scale {
        factor: f64,
        arg: Box<GenFunSpec>,
    },
    Pullback {
        mu: DiffeoSpec,
        arg: Box<GenFunSpec>,
    },
    LieDerivative {
        field: Vec<ExprSpec>,
        arg: Box<GenFunSpec>,
    },
    Restrict {
        domain: BoxSpec,
        arg: Box<GenFunSpec>,
    },
    Glue {
        pieces: Vec<GenFunSpec>,
        cover: Vec<BoxSpec>,
        partition: Vec<PartitionSpec>,
    },
}

fn one() -> usize {
    1
}

impl GenFunSpec {
    pub fn build(&self) -> Result<GenFun> {
        let all = |args: &[GenFunSpec]| args.iter().map(GenFunSpec::build).collect::<Result<Vec<_>>>();
        match self {
            GenFunSpec::Iota { dist } => Ok(GenFun::iota(dist.build()?)),
            GenFunSpec::Sigma { dim, f } => {
                if !(1..=2).contains(dim) {
                    return Err(Error::UnsupportedDimension(*dim));
                }
                Ok(GenFun::sigma(f.build(*dim)?))
            }
            GenFunSpec::Sum { args } => GenFun::sum(all(args)?),
            GenFunSpec::Product { args } => GenFun::product(all(args)?),
            GenFunSpec::Scale { factor, arg } => Ok(GenFun::scale(*factor, arg.build()?)),
            GenFunSpec::Pullback { mu, arg } => GenFun::pullback(&mu.build()?, arg.build()?),
            GenFunSpec::LieDerivative { field, arg } => {
                let r = arg.build()?;
                let x = VectorField::new(field.iter().map(|c| c.build(r.dim())).collect::<Result<_>>()?)?;
                GenFun::lie_derivative(&x, r)
            }
            GenFunSpec::Restrict { domain, arg } => arg.build()?.restrict(&domain.build()?),
            GenFunSpec::Glue { pieces, cover, partition } => {
                let pieces = all(pieces)?;
                let n = pieces.first().map(GenFun::dim).unwrap_or(1);
                let cover = cover.iter().map(BoxSpec::build).collect::<Result<Vec<_>>>()?;
                let parts = partition
                    .iter()
                    .map(|p| Ok(GluePart { piece: p.piece, chi: p.chi.build(n)?, theta: p.theta.build(n)? }))
                    .collect::<Result<Vec<_>>>()?;
                GenFun::sheaf_glue(pieces, &cover, parts)
            }
        }
    }
}
