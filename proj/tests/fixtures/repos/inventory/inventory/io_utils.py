from .models import PerishableProduct, Product

SEPARATOR = ","


def parse_line(line):
    parts = line.strip().split(SEPARATOR)
    return parts


def product_from_parts(parts):
    if len(parts) > 3:
        return PerishableProduct(parts[0], parts[1], float(parts[2]), int(parts[3]))
    return Product(parts[0], parts[1], float(parts[2]))


def load_products(text):
    products = []
    for line in text.splitlines():
        if not line:
            continue
        products.append(product_from_parts(parse_line(line)))
    return products
