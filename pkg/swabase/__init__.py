__all__ = ['container',
           'dtypes',
           'exceptions']
