"""Finite categories, functors, natural transformations and limit search."""
from .category import (ComputedCategory, FinCat, FunctionCategory, Functor, NatTrans,
                       Opposite, Subcategory, TableCategory, as_table, compose_functors,
                       full_subcategory, identity_functor, make_category, table_of)
from .ops import (Diagram, FunctorAnalysis, LimitWitness, ValidationReport, analyze_functor,
                  comma_category, find_isomorphism, find_limits, hom_set, is_natural_iso,
                  iso_classes, isomorphisms, mediating, natural_iso_between, pullback_category,
                  validate_category, validate_functor, validate_nat)
