from .nodes import BinOp, Call, Node, Num, Var

FUNCTIONS = ("abs", "max", "min")


class Visitor:
    def visit_node(self, node):
        raise NotImplementedError

    def visit_num(self, node):
        return self.visit_node(node)

    def visit_var(self, node):
        return self.visit_node(node)

    def visit_binop(self, node):
        return self.visit_node(node)

    def visit_call(self, node):
        return self.visit_node(node)


class Evaluator(Visitor):
    def __init__(self, env=None):
        self.env = env or {}

    def visit_num(self, node):
        return node.value

    def visit_var(self, node):
        return self.env.get(node.name, 0)

    def visit_binop(self, node):
        left = node.left.accept(self)
        right = node.right.accept(self)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left // right if right else 0

    def visit_call(self, node):
        values = [arg.accept(self) for arg in node.args]
        if node.func not in FUNCTIONS or not values:
            return 0
        if node.func == "abs":
            return abs(values[0])
        if node.func == "max":
            return max(values)
        return min(values)
