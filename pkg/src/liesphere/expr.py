"""Small arithmetic-expression language for fields given on the command line.

Grammar: numbers, variables, ``+ - * / ^`` (``**`` also accepted), parentheses,
and the functions ``exp ln log sin cos tan sinh cosh sqrt const``.  The parse
uses :mod:`ast` with a node whitelist; nothing is ever ``eval``-ed.
"""
import ast
import math

import numpy as np

from . import fields as F
from .errors import ExpressionError

_FUNCS = {
    "exp": F.exp, "ln": F.log, "log": F.log, "sin": F.sin, "cos": F.cos,
    "tan": F.tan, "sinh": F.sinh, "cosh": F.cosh, "sqrt": F.sqrt,
}
_CONSTS = {"pi": math.pi, "e": math.e}


def _const(x):
    return x


class Expression:
    """Parsed expression; call with one field/array per variable."""

    def __init__(self, text, variables=("R1", "R2")):
        self.text = text
        self.variables = tuple(variables)
        src = text.replace("^", "**").strip()
        try:
            tree = ast.parse(src, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None
        self._check(tree.body)
        self.tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
                raise ExpressionError(f"operator not allowed in {self.text!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise ExpressionError(f"operator not allowed in {self.text!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or (
                    node.func.id not in _FUNCS and node.func.id != "const"):
                raise ExpressionError(f"unknown function in {self.text!r}")
            if node.keywords or len(node.args) != 1:
                raise ExpressionError(f"functions take exactly one argument in {self.text!r}")
            if node.func.id == "const" and not self._is_number(node.args[0]):
                raise ExpressionError("const() takes a numeric literal")
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ExpressionError(f"unknown symbol {node.id!r} in {self.text!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"bad literal in {self.text!r}")
        else:
            raise ExpressionError(f"construct not allowed in {self.text!r}")

    @staticmethod
    def _is_number(node):
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            node = node.operand
        return isinstance(node, ast.Constant) and isinstance(node.value, (int, float))

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise ExpressionError(f"expected {len(self.variables)} arguments")
        env = dict(zip(self.variables, args))
        return self._eval(self.tree, env)

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            a = self._eval(node.left, env)
            b = self._eval(node.right, env)
            op = node.op
            if isinstance(op, ast.Add):
                return a + b
            if isinstance(op, ast.Sub):
                return a - b
            if isinstance(op, ast.Mult):
                return a * b
            if isinstance(op, ast.Div):
                return a / b
            if isinstance(b, (int, float)) and float(b).is_integer() and b >= 0:
                return a ** int(b)
            return a ** b
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            arg = self._eval(node.args[0], env)
            if node.func.id == "const":
                return float(arg)
            return _FUNCS[node.func.id](arg)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            return _CONSTS[node.id]
        return node.value

    def is_constant(self):
        return not any(isinstance(n, ast.Name) and n.id in self.variables
                       for n in ast.walk(self.tree))

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse_assignment(text, variables=("R1", "R2")):
    """``"u=exp(R1)"`` -> ``("u", Expression)``."""
    if "=" not in text:
        raise ExpressionError(f"field assignment must look like name=expression, got {text!r}")
    name, rhs = text.split("=", 1)
    name = name.strip()
    if not name.isidentifier():
        raise ExpressionError(f"bad field name {name!r}")
    return name, Expression(rhs, variables)


def to_field(expr, nvars=2):
    """Wrap an expression as an :class:`~liesphere.fields.AnalyticField`."""

    def fn(*xs):
        out = expr(*xs)
        if np.isscalar(out):
            return out + 0.0 * xs[0]
        return out

    return F.AnalyticField(fn, nvars, label=expr.text)
